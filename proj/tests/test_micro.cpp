#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "porelab/corrector.hpp"
#include "porelab/micro.hpp"

using namespace porelab;

TEST_CASE("empty hole exterior solve is the identity flow", "[micro]") {
    auto sol = solve_exterior_stokes(HoleShape::ball(0.0), 8.0, 16);
    for (int dir = 0; dir < 3; ++dir)
        for (int c = 0; c < 3; ++c)
            for (double v : sol.v[dir].comp[c].raw())
                REQUIRE(v == (c == dir ? 1.0 : 0.0));
    REQUIRE(sol.energy.frobenius() == 0.0);
}

TEST_CASE("exterior solve around a ball", "[micro]") {
    auto sol = solve_exterior_stokes(HoleShape::ball(0.1), 6.0, 48, 1e-8);
    // no-slip on hole faces
    for (int dir = 0; dir < 3; ++dir)
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 48; ++i)
                for (int j = 0; j < 48; ++j)
                    for (int k = 0; k < 48; ++k) {
                        const bool hf = sol.hole_cells(i, j, k) ||
                                        (c == 0 ? sol.hole_cells.at(i - 1, j, k)
                                                : (c == 1 ? sol.hole_cells.at(i, j - 1, k)
                                                          : sol.hole_cells.at(i, j, k - 1)));
                        if (hf) REQUIRE(sol.v[dir].comp[c](i, j, k) == 0.0);
                    }
    REQUIRE(sol.div_residual <= 1e-5);

    // cubic-lattice symmetry: equal diagonal energies, tiny off-diagonals
    const double d0 = sol.energy(0, 0);
    REQUIRE(d0 > 0.0);
    REQUIRE(sol.energy(1, 1) == Catch::Approx(d0).epsilon(1e-6));
    REQUIRE(sol.energy(2, 2) == Catch::Approx(d0).epsilon(1e-6));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) REQUIRE(std::abs(sol.energy(i, j)) <= 1e-4 * d0);

    // truncated drag overestimates and lands in the right ballpark of 6 pi
    REQUIRE(d0 > 6.0 * M_PI);
    REQUIRE(d0 < 3.0 * 6.0 * M_PI);
}

TEST_CASE("far-field deviation decays with the shell radius", "[micro]") {
    auto dev_on_shell = [](const ExteriorSolution& sol, double radius) {
        double worst = 0.0;
        const int n = sol.n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const Vec3 y = sol.cell_center(i, j, k);
                    if (std::abs(y.norm() - radius) > sol.h) continue;
                    const double dev = std::abs(sol.v[0].comp[0](i, j, k) - 1.0) +
                                       std::abs(sol.v[0].comp[1](i, j, k)) +
                                       std::abs(sol.v[0].comp[2](i, j, k));
                    worst = std::max(worst, dev);
                }
        return worst;
    };
    auto s1 = solve_exterior_stokes(HoleShape::ball(0.1), 12.0, 48, 1e-8);
    auto s2 = solve_exterior_stokes(HoleShape::ball(0.1), 24.0, 96, 1e-8);
    const double d1 = dev_on_shell(s1, 6.0);
    const double d2 = dev_on_shell(s2, 12.0);
    INFO("shell deviations " << d1 << " -> " << d2);
    REQUIRE(d2 < d1);
    REQUIRE(d1 <= 2.0 / 6.0);  // O(1/R) with a modest constant
}

TEST_CASE("permeability extrapolation on a small budget", "[micro]") {
    const double rho = 0.1;
    auto perm = permeability(HoleShape::ball(rho), {6.0, 12.0}, 48, 1e-8);
    perm.check_spd();
    const double target = 6.0 * M_PI * rho;
    for (int i = 0; i < 3; ++i)
        REQUIRE(perm.m(i, i) == Catch::Approx(target).epsilon(0.1));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) REQUIRE(std::abs(perm.m(i, j)) <= 0.02 * perm.m(0, 0));
    REQUIRE(perm.raw_energies.size() >= 3);

    // degenerate: empty hole
    auto none = permeability(HoleShape::ball(0.0), {6.0, 12.0}, 32);
    REQUIRE(none.degenerate);
    REQUIRE(none.m.frobenius() == 0.0);

    // drag is linear in the ball radius (same normalized solve)
    auto perm2 = permeability(HoleShape::ball(2.0 * rho), {6.0, 12.0}, 48, 1e-8);
    REQUIRE(perm2.m(0, 0) == Catch::Approx(2.0 * perm.m(0, 0)).epsilon(1e-9));

    const std::string path = "perm_roundtrip.json";
    save_permeability(perm, path);
    auto loaded = load_permeability(path);
    for (int i = 0; i < 9; ++i) REQUIRE(loaded.m.a[i] == perm.m.a[i]);
    std::remove(path.c_str());
}

TEST_CASE("corrector assembly invariants", "[micro][corrector]") {
    PerforationSpec spec;
    spec.epsilon = 0.25;
    spec.alpha = 1.5;
    spec.hole = HoleShape::ball(0.5);
    auto ext = solve_exterior_stokes(spec.hole, 8.0, 64, 1e-8);
    auto cf = build_corrector(spec, GridSpec{96}, ext, 1e-8);
    REQUIRE(cf.m == 24);

    // exact values by region: identity outside B(eps/2), zero on the hole
    bool has_id = false, has_hole = false;
    for (int dir = 0; dir < 3; ++dir)
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < cf.m; ++i)
                for (int j = 0; j < cf.m; ++j)
                    for (int k = 0; k < cf.m; ++k) {
                        const auto r1 = cf.region(i, j, k);
                        const auto r2 = c == 0 ? cf.region.at(i - 1, j, k)
                                               : (c == 1 ? cf.region.at(i, j - 1, k)
                                                         : cf.region.at(i, j, k - 1));
                        const double v = cf.W[dir].comp[c](i, j, k);
                        if (r1 == CorrectorField::kHole || r2 == CorrectorField::kHole) {
                            REQUIRE(v == 0.0);
                            has_hole = true;
                        } else if (r1 == CorrectorField::kId && r2 == CorrectorField::kId) {
                            REQUIRE(v == (c == dir ? 1.0 : 0.0));
                            has_id = true;
                        }
                    }
    REQUIRE(has_id);
    REQUIRE(has_hole);

    // discrete divergence of each column within tolerance
    REQUIRE(cf.div_tolerance <= 1e-5);

    // max norm: 1 on the hole, bounded overall
    const auto ninf = corrector_norms(cf, std::numeric_limits<double>::infinity());
    REQUIRE(ninf.w_minus_id >= 1.0);
    REQUIRE(cf.max_overshoot <= 0.5);

    // q < 1 is out of range
    REQUIRE_THROWS_AS(corrector_norms(cf, 0.5), ValidationError);

    // q=3 annotation about the log factor
    REQUIRE(corrector_norms(cf, 3.0).note.find("log") != std::string::npos);
}

TEST_CASE("corrector tiling invariance", "[micro][corrector]") {
    PerforationSpec spec;
    spec.epsilon = 0.25;
    spec.alpha = 1.5;
    spec.hole = HoleShape::ball(0.5);
    auto ext = solve_exterior_stokes(spec.hole, 8.0, 48, 1e-8);
    auto cf = build_corrector(spec, GridSpec{64}, ext, 1e-8);
    auto tiled = tile_corrector(cf, 2);
    for (double q : {1.0, 2.0}) {
        const auto a = corrector_norms(cf, q);
        const auto b = corrector_norms(tiled, q);
        REQUIRE(b.w_minus_id == Catch::Approx(a.w_minus_id).epsilon(1e-12));
        REQUIRE(b.grad_w == Catch::Approx(a.grad_w).epsilon(1e-12));
        REQUIRE(b.q_norm == Catch::Approx(a.q_norm).epsilon(1e-12));
    }
}

TEST_CASE("corrector requires a large enough exterior box", "[micro][corrector]") {
    PerforationSpec spec;
    spec.epsilon = 0.25;
    spec.alpha = 2.5;  // strongly separated scales: eps/4 is many hole radii
    spec.hole = HoleShape::ball(0.5);
    auto ext = solve_exterior_stokes(spec.hole, 4.0, 32, 1e-6);
    // needed R = eps^{1-a}/(4 rho) = 4^{1.5}/2 = 4 plus margin: rejected
    REQUIRE_THROWS_AS(build_corrector(spec, GridSpec{128}, ext), ValidationError);
}

TEST_CASE("pairing diagnostic approaches the permeability action", "[micro][corrector]") {
    PerforationSpec spec;
    spec.alpha = 1.5;
    spec.hole = HoleShape::ball(0.5);
    auto ext = solve_exterior_stokes(spec.hole, 8.0, 64, 1e-8);
    auto perm = permeability(spec.hole, {6.0, 12.0}, 48, 1e-8);

    BandLimitedField phi = forcing_constant({1.0, 0.0, 0.0});  // solenoidal constant test field
    std::vector<double> defects;
    for (double eps : {0.25, 0.125}) {
        spec.epsilon = eps;
        const int n = static_cast<int>(std::llround(24 / eps));
        auto cf = build_corrector(spec, GridSpec{n}, ext, 1e-8);
        const auto rep = corrector_pairing(cf, perm.m, phi, 0);
        INFO("eps=" << eps << " pairing=" << rep.pairing << " target=" << rep.target);
        REQUIRE(rep.pairing > 0.0);
        defects.push_back(rep.defect / std::abs(rep.target));
    }
    REQUIRE(defects[1] < defects[0]);
    REQUIRE(defects[1] < 0.5);
}
