#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "porelab/core/rng.hpp"
#include "porelab/fft/fft3.hpp"
#include "porelab/geometry.hpp"
#include "porelab/stokes/mac_ops.hpp"
#include "porelab/stokes/poisson.hpp"
#include "porelab/stokes/saddle.hpp"

using namespace porelab;

namespace {

DomainMask all_fluid_mask(int n) {
    PerforationSpec spec;
    spec.epsilon = 0.5;
    spec.alpha = 1.5;
    spec.hole = HoleShape::ball(0.0);
    return build_mask(spec, GridSpec{n});
}

DomainMask holey_mask(int n) {
    PerforationSpec spec;
    spec.epsilon = 0.5;
    spec.alpha = 1.5;
    spec.hole = HoleShape::ball(0.3);  // scaled radius ~0.106, resolvable from n = 20
    return build_mask(spec, GridSpec{n});
}

MacField random_face_field(GridDims d, std::uint64_t seed) {
    MacField u(d);
    Rng rng(seed);
    for (int c = 0; c < 3; ++c)
        for (auto& v : u.comp[c].raw()) v = rng.normal();
    return u;
}

Field3 random_cell_field(GridDims d, std::uint64_t seed) {
    Field3 p(d);
    Rng rng(seed);
    for (auto& v : p.raw()) v = rng.normal();
    return p;
}

}  // namespace

TEST_CASE("fft round trip", "[fft]") {
    GridDims d{12, 8, 10};
    Fft3 fft(d);
    Field3 f = random_cell_field(d, 3);
    Field3 orig = f;
    std::vector<std::complex<double>> spec;
    fft.forward(f, spec);
    Field3 back(d);
    fft.inverse(spec, back);
    for (std::size_t i = 0; i < f.size(); ++i)
        REQUIRE(back.raw()[i] == Catch::Approx(orig.raw()[i]).margin(1e-12));
}

TEST_CASE("divergence and gradient are skew adjoint", "[macops]") {
    GridDims d{16, 16, 16};
    const double h = 1.0 / 16;
    MacField u = random_face_field(d, 11);
    Field3 p = random_cell_field(d, 12);
    Field3 du(d);
    divergence(u, h, du);
    MacField gp(d);
    gradient(p, h, gp);
    // <Du, p> = -<u, Gp>
    REQUIRE(dot(du, p) == Catch::Approx(-dot(u, gp)).epsilon(1e-11));
}

TEST_CASE("discrete strain identity on the periodic torus", "[macops]") {
    // ||grad u||^2 = 2||Du||^2 - ||div u||^2 exactly for periodic MAC fields
    GridDims d{12, 12, 12};
    const double h = 1.0 / 12;
    MacField u = random_face_field(d, 21);
    StrainField D(d);
    strain(u, h, D);
    Field3 div(d);
    divergence(u, h, div);
    const double g2 = gradient_lq_pow(u, h, 2.0);
    const double s2 = strain_lq_pow(D, h, 2.0);
    const double d2 = dot(div, div) * h * h * h;
    REQUIRE(g2 == Catch::Approx(2.0 * s2 - d2).epsilon(1e-10));
}

TEST_CASE("viscous operator is symmetric and positive", "[macops]") {
    GridDims d{12, 12, 12};
    const double h = 1.0 / 12;
    ViscosityField eta;
    // variable but positive viscosity
    eta.cell = Field3(d);
    Rng rng(5);
    for (auto& v : eta.cell.raw()) v = 1.0 + 0.5 * rng.uniform();
    for (int c = 0; c < 3; ++c) {
        eta.edge[c] = Field3(d);
        for (auto& v : eta.edge[c].raw()) v = 1.0 + 0.5 * rng.uniform();
    }
    MacField x = random_face_field(d, 31), y = random_face_field(d, 32);
    MacField Ax(d), Ay(d);
    Ax.fill(0.0);
    Ay.fill(0.0);
    StrainField work(d);
    viscous_apply(x, eta, h, 1.0, work, Ax);
    viscous_apply(y, eta, h, 1.0, work, Ay);
    REQUIRE(dot(Ax, y) == Catch::Approx(dot(x, Ay)).epsilon(1e-10));
    REQUIRE(dot(Ax, x) > 0.0);
}

TEST_CASE("saddle operator symmetry with mask", "[saddle]") {
    auto mask = holey_mask(20);
    SaddleParams prm;
    prm.visc_coeff = 0.7;
    prm.gamma = 0.3;
    prm.mass_coeff = 0.1;
    SaddleSolver solver(mask, prm);
    solver.set_constant_viscosity(1.3);

    // probe symmetry through two solves' worth of operator applications via
    // the public solve on reversed roles is awkward; instead verify that the
    // solve returns a solution whose momentum residual vanishes, which
    // exercises the same operator path.
    GridDims d = mask.dims;
    MacField f = random_face_field(d, 41);
    zero_fixed_faces(f, mask);
    Field3 g(d, 0.0);
    MacField u(d);
    u.fill(0.0);
    Field3 p(d);
    auto stats = solver.solve(f, g, u, p);
    REQUIRE(stats.converged);

    MacField res(d);
    solver.momentum_residual(u, p, f, res);
    // the AL-free momentum residual of the converged solution is small
    REQUIRE(l2_norm(res, mask.h) <= 1e-6 * std::max(1.0, l2_norm(f, mask.h)));

    Field3 div(d);
    divergence(u, mask.h, div);
    zero_solid_cells(div, mask);
    REQUIRE(l2_norm(div, mask.h) <= 1e-6);

    // velocity vanishes on fixed faces
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < u.comp[c].size(); ++i)
            if (mask.face_solid[c].raw()[i]) REQUIRE(u.comp[c].raw()[i] == 0.0);
}

TEST_CASE("saddle solve without holes matches gradient forcing", "[saddle]") {
    auto mask = all_fluid_mask(16);
    SaddleParams prm;
    prm.visc_coeff = 1.0;
    prm.gamma = 0.5;
    prm.tol = 1e-12;
    SaddleSolver solver(mask, prm);
    solver.set_constant_viscosity(1.0);

    // f = G(phi): the discrete-gradient forcing is absorbed by pressure, u = 0
    GridDims d = mask.dims;
    Field3 phi(d);
    for (int i = 0; i < d.nx; ++i)
        for (int j = 0; j < d.ny; ++j)
            for (int k = 0; k < d.nz; ++k)
                phi(i, j, k) = std::sin(2 * M_PI * (i + 0.5) / d.nx) *
                               std::cos(2 * M_PI * (j + 0.5) / d.ny);
    MacField f(d);
    gradient(phi, mask.h, f);
    Field3 g(d, 0.0);
    MacField u(d);
    u.fill(0.0);
    Field3 p(d);
    auto stats = solver.solve(f, g, u, p);
    REQUIRE(stats.converged);
    REQUIRE(l2_norm(u, mask.h) <= 1e-10);

    // recovered pressure equals phi minus its mean
    Field3 expect = phi;
    remove_fluid_mean(expect, mask);
    axpy(-1.0, p, expect);
    REQUIRE(l2_norm(expect, mask.h) <= 1e-9);
}

TEST_CASE("saddle solver honors prescribed divergence", "[saddle]") {
    auto mask = holey_mask(20);
    SaddleParams prm;
    prm.visc_coeff = 1.0;
    prm.gamma = 1.0;
    prm.tol = 1e-11;
    SaddleSolver solver(mask, prm);
    solver.set_constant_viscosity(1.0);

    GridDims d = mask.dims;
    Field3 g = random_cell_field(d, 55);
    zero_solid_cells(g, mask);
    remove_fluid_mean(g, mask);
    MacField f(d);
    f.fill(0.0);
    MacField u(d);
    u.fill(0.0);
    Field3 p(d);
    auto stats = solver.solve(f, g, u, p);
    REQUIRE(stats.converged);
    Field3 div(d);
    divergence(u, mask.h, div);
    zero_solid_cells(div, mask);
    axpy(-1.0, g, div);
    zero_solid_cells(div, mask);
    REQUIRE(l2_norm(div, mask.h) <= 1e-8 * std::max(1.0, l2_norm(g, mask.h)));
}

TEST_CASE("fixed-face lifting carries Dirichlet data", "[saddle]") {
    // rim trick: freeze a slab of cells and prescribe unit velocity there
    const int n = 16;
    DomainMask mask = all_fluid_mask(n);
    // mark cells i==0,1 as solid-like carriers of Dirichlet data
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            mask.solid(0, j, k) = 1;
            mask.solid(1, j, k) = 1;
        }
    mask.solid_cells = 2LL * n * n;
    mask.porosity = 1.0 - 2.0 / n;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const bool s = mask.solid(i, j, k) ||
                                   (c == 0 ? mask.solid.at(i - 1, j, k)
                                           : (c == 1 ? mask.solid.at(i, j - 1, k)
                                                     : mask.solid.at(i, j, k - 1)));
                    mask.face_solid[c](i, j, k) = s ? 1 : 0;
                }

    SaddleParams prm;
    prm.visc_coeff = 1.0;
    prm.gamma = 0.5;
    prm.tol = 1e-11;
    SaddleSolver solver(mask, prm);
    solver.set_constant_viscosity(1.0);

    GridDims d = mask.dims;
    MacField f(d), u(d);
    f.fill(0.0);
    u.fill(0.0);
    // prescribe u_y = 1 on all fixed y-faces (a shear-driving slab)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (mask.face_solid[1](i, j, k)) u.comp[1](i, j, k) = 1.0;
    Field3 g(d, 0.0), p(d);
    auto stats = solver.solve(f, g, u, p);
    REQUIRE(stats.converged);
    // data preserved on fixed faces, flow dragged in the fluid
    for (int j = 0; j < n; ++j) REQUIRE(u.comp[1](0, j, 0) == 1.0);
    double interior = 0.0;
    for (int j = 0; j < n; ++j) interior += u.comp[1](n / 2, j, 0);
    REQUIRE(interior > 0.0);
}

TEST_CASE("leray projection produces divergence-free fields", "[poisson]") {
    auto mask = holey_mask(20);
    MacField u = random_face_field(mask.dims, 77);
    auto st = leray_project(u, mask, 1e-11, 2000);
    REQUIRE(st.converged);
    Field3 div(mask.dims);
    divergence(u, mask.h, div);
    zero_solid_cells(div, mask);
    REQUIRE(l2_norm(div, mask.h) <= 1e-9);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < u.comp[c].size(); ++i)
            if (mask.face_solid[c].raw()[i]) REQUIRE(u.comp[c].raw()[i] == 0.0);
}

TEST_CASE("deterministic solves", "[saddle]") {
    auto mask = holey_mask(20);
    SaddleParams prm;
    prm.visc_coeff = 1.0;
    prm.gamma = 0.5;
    prm.tol = 1e-10;
    GridDims d = mask.dims;
    MacField f = random_face_field(d, 99);
    zero_fixed_faces(f, mask);
    Field3 g(d, 0.0);

    MacField u1(d), u2(d);
    Field3 p1(d), p2(d);
    {
        SaddleSolver solver(mask, prm);
        solver.set_constant_viscosity(1.0);
        u1.fill(0.0);
        solver.solve(f, g, u1, p1);
    }
    {
        SaddleSolver solver(mask, prm);
        solver.set_constant_viscosity(1.0);
        u2.fill(0.0);
        solver.solve(f, g, u2, p2);
    }
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < u1.comp[c].size(); ++i)
            REQUIRE(u1.comp[c].raw()[i] == u2.comp[c].raw()[i]);
    for (std::size_t i = 0; i < p1.size(); ++i) REQUIRE(p1.raw()[i] == p2.raw()[i]);
}
