#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "porelab/harness.hpp"

using namespace porelab;

TEST_CASE("predicted velocity exponents", "[harness]") {
    REQUIRE(predicted_exponent(1.2, false, RateSetting::TorusStationary) == Catch::Approx(0.2));
    REQUIRE(predicted_exponent(2.0, true, RateSetting::TorusStationary) == Catch::Approx(1.0));
    REQUIRE(predicted_exponent(1.2, false, RateSetting::BoundedStationary) == Catch::Approx(0.2));
    REQUIRE(predicted_exponent(1.4, true, RateSetting::BoundedStationary) ==
            Catch::Approx(std::min(0.4, 0.8)));
    // evolutionary settings share the stationary exponents
    REQUIRE(predicted_exponent(1.25, false, RateSetting::TorusEvolutionary) ==
            predicted_exponent(1.25, false, RateSetting::TorusStationary));

    REQUIRE_THROWS_AS(predicted_exponent(1.7, false, RateSetting::TorusStationary),
                      ValidationError);
    REQUIRE_THROWS_AS(predicted_exponent(3.2, true, RateSetting::TorusStationary),
                      ValidationError);
}

TEST_CASE("predicted pressure exponents", "[harness]") {
    auto p1 = predicted_pressure_exponent(1.2, 2.5, 1.5, false);
    REQUIRE(p1.value == Catch::Approx(0.1));
    REQUIRE(p1.margin == Catch::Approx(0.01));

    auto p2 = predicted_pressure_exponent(1.4, 3.0, 2.0, true);
    REQUIRE(p2.value == Catch::Approx(0.2));

    // the r > 2 term enters the min and can bind
    auto p3 = predicted_pressure_exponent(1.45, 9.0, 4.0, false);
    REQUIRE(p3.value == Catch::Approx((3.0 - 2.9) * 0.5));

    REQUIRE_THROWS_AS(predicted_pressure_exponent(1.7, 3.0, 1.5, false), ValidationError);
    REQUIRE_THROWS_AS(predicted_pressure_exponent(1.2, 1.1, 1.5, false), ValidationError);
}

TEST_CASE("rate fitting", "[harness]") {
    std::vector<double> eps{0.25, 0.125, 0.0625};
    std::vector<double> lin{0.25, 0.125, 0.0625};
    REQUIRE(fit_rate(eps, lin).slope == Catch::Approx(1.0).epsilon(1e-12));

    std::vector<double> pow02;
    for (double e : eps) pow02.push_back(3.7 * std::pow(e, 0.2));
    auto fit = fit_rate(eps, pow02);
    REQUIRE(fit.slope == Catch::Approx(0.2).epsilon(1e-12));
    REQUIRE(fit.pairwise.size() == 2);
    REQUIRE(fit.pairwise[0] == Catch::Approx(0.2).epsilon(1e-12));

    std::vector<double> flat{1e-2, 1e-2};
    REQUIRE(fit_rate({0.25, 0.125}, flat).slope == Catch::Approx(0.0).margin(1e-14));

    REQUIRE_THROWS_AS(fit_rate({0.25, 0.125}, {1.0, 0.0}), ValidationError);
    REQUIRE_THROWS_AS(fit_rate({0.25}, {1.0}), ValidationError);
}

TEST_CASE("relative energy", "[harness]") {
    PerforationSpec spec;
    spec.epsilon = 0.5;
    spec.alpha = 1.5;
    spec.hole = HoleShape::ball(0.3);
    auto mask = build_mask(spec, GridSpec{20});
    MacField u(mask.dims), U(mask.dims);
    Rng rng(5);
    for (int c = 0; c < 3; ++c)
        for (auto& v : u.comp[c].raw()) v = rng.normal();
    zero_fixed_faces(u, mask);

    REQUIRE(relative_energy(u, u, 2.5, 0.5, mask) == 0.0);

    U.fill(0.0);
    const double n2 = dot(u, u) * std::pow(mask.h, 3);
    REQUIRE(relative_energy(u, U, 2.5, 0.5, mask) ==
            Catch::Approx(0.5 * std::pow(0.5, 2.5) * n2).epsilon(1e-12));

    // quadratic scaling: doubling the difference quadruples the value
    MacField u2 = u;
    scale(u2, 2.0);
    zero_fixed_faces(u2, mask);
    REQUIRE(relative_energy(u2, U, 2.5, 0.5, mask) ==
            Catch::Approx(4.0 * relative_energy(u, U, 2.5, 0.5, mask)).epsilon(1e-12));

    MacField wrong(GridDims{8, 8, 8});
    REQUIRE_THROWS_AS(relative_energy(wrong, U, 2.5, 0.5, mask), ValidationError);
}

TEST_CASE("grid rule matches the resolvability default", "[harness]") {
    GridRule rule;
    // rho = 1/4 makes the rule read max(64, 8 eps^-alpha), lattice-rounded
    HoleShape hole = HoleShape::ball(0.25);
    REQUIRE(rule.pick(0.25, 2.0, hole, 99) == 128);  // 8*16 = 128
    REQUIRE(rule.pick(0.25, 1.2, hole, 99) == 64);   // floor binds
    REQUIRE_THROWS_AS(rule.pick(0.0625, 2.0, hole, 99), ResolvabilityError);  // 2048 > n_max

    GridRule with_override;
    with_override.n_override = {40};
    REQUIRE(with_override.pick(0.25, 2.0, hole, 0) == 40);
    with_override.n_override = {41};
    REQUIRE_THROWS_AS(with_override.pick(0.25, 2.0, hole, 0), ValidationError);
}

TEST_CASE("config json round trip", "[harness]") {
    ExperimentConfig cfg;
    cfg.name = "roundtrip";
    cfg.alpha = 1.25;
    cfg.hole = HoleShape::ball(0.5);
    cfg.epsilons = {0.25, 0.125};
    cfg.lambda = 2.5;
    cfg.law.kind = "carreau_yasuda";
    cfg.law.cy = CarreauYasuda{2.0, 1.0, 1.0, 1.5, 2.0};
    cfg.mode = "evolutionary";
    cfg.dt = 0.001;
    cfg.t_end = 0.01;
    auto j = cfg.to_json();
    auto back = ExperimentConfig::from_json(j);
    REQUIRE(back.alpha == cfg.alpha);
    REQUIRE(back.law.kind == "carreau_yasuda");
    REQUIRE(back.law.cy.r == 1.5);
    REQUIRE(back.epsilons == cfg.epsilons);
    REQUIRE(back.mode == "evolutionary");
    REQUIRE(back.dt == cfg.dt);
    back.validate();

    ExperimentConfig bad = cfg;
    bad.epsilons = {0.125, 0.25};
    REQUIRE_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.lambda = 1.0;
    REQUIRE_THROWS_AS(bad.validate(), ValidationError);
}

namespace {

ExperimentConfig mini_sweep_config() {
    ExperimentConfig cfg;
    cfg.name = "mini";
    cfg.alpha = 1.5;
    cfg.hole = HoleShape::ball(0.3);
    cfg.epsilons = {0.5, 0.25};
    cfg.grid.n_min = 20;
    cfg.grid.n_override = {20, 56};
    cfg.lambda = 2.5;
    cfg.law.kind = "newtonian";
    cfg.law.eta0 = 1.0;
    cfg.forcing.preset = "single_mode";
    cfg.tol = 1e-7;
    cfg.perm_R = {6.0, 12.0};
    cfg.perm_n = 48;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("mini sweep end to end", "[harness][sweep]") {
    auto cfg = mini_sweep_config();
    const std::string dir = "mini_sweep_out";
    auto rep = run_sweep(cfg, dir);
    REQUIRE(!rep.aborted);
    REQUIRE(rep.points.size() == 2);
    for (const auto& p : rep.points) {
        REQUIRE(p.done);
        REQUIRE(p.err_u_sq > 0.0);
        REQUIRE(p.err_p_l1 > 0.0);
    }
    REQUIRE(rep.fits_valid);
    INFO("velocity slope " << rep.velocity_fit.slope);

    REQUIRE(std::filesystem::exists(dir + "/manifest.json"));
    REQUIRE(std::filesystem::exists(dir + "/results.csv"));
    REQUIRE(std::filesystem::exists(dir + "/plots/mini_velocity.svg"));
    REQUIRE(std::filesystem::exists(dir + "/plots/mini_pressure.svg"));

    // byte-identical rerun
    auto rep2 = run_sweep(cfg, dir + "2");
    REQUIRE(slurp(dir + "/results.csv") == slurp(dir + "2/results.csv"));

    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir + "2");
}

TEST_CASE("degenerate zero-forcing sweep", "[harness][sweep]") {
    auto cfg = mini_sweep_config();
    cfg.name = "zero";
    cfg.forcing.preset = "constant";
    cfg.forcing.f0 = {0.0, 0.0, 0.0};
    const std::string dir = "zero_sweep_out";
    auto rep = run_sweep(cfg, dir);
    REQUIRE(rep.degenerate);
    REQUIRE(!rep.fits_valid);
    std::filesystem::remove_all(dir);
}
