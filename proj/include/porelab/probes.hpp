#pragma once

#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "porelab/core/rng.hpp"
#include "porelab/stokes/poisson.hpp"
#include "porelab/stokes/saddle.hpp"

namespace porelab {

// Predicted Poincare exponent (3-(3-q)a)/q; q=2 gives (3-a)/2.
inline double poincare_exponent(double alpha, double q = 2.0) {
    return (3.0 - (3.0 - q) * alpha) / q;
}

// Predicted Bogovskii norm-growth magnitude |((3-q)a-3)/q|; q=2 gives (3-a)/2.
inline double bogovskii_exponent(double alpha, double q = 2.0) {
    return std::abs(((3.0 - q) * alpha - 3.0) / q);
}

// C = 1/sqrt(lambda_1) of the cell-centered Laplacian with Dirichlet values on
// solid cells and periodicity elsewhere, by inverse power iteration.
inline double poincare_constant(const DomainMask& mask, double eig_tol = 1e-8,
                                int max_power_iters = 200) {
    if (mask.all_fluid())
        throw ValidationError("poincare_constant: mask has no holes, no Dirichlet constraint");
    const GridDims d = mask.dims;
    ByteField3 fluid(d, 0);
    for (std::size_t i = 0; i < fluid.size(); ++i) fluid.raw()[i] = mask.solid.raw()[i] ? 0 : 1;

    // shift keeps the k=0 mode invertible in the preconditioner; the scale is
    // the capacity density of the holes (any positive O(lambda_1) value works)
    const double solid_frac = 1.0 - mask.porosity;
    const double shift = std::max(1.0, 40.0 * std::cbrt(solid_frac));
    CellPoisson poisson(d, mask.h, CellPoisson::Kind::Dirichlet, fluid, nullptr, shift);

    Field3 x(d, 1.0), y(d);
    detail::zero_where_not(x, fluid);
    double lambda = 0.0, lambda_prev = -1.0;
    for (int it = 0; it < max_power_iters; ++it) {
        auto st = poisson.solve(x, y, 1e-11, 8000);
        if (!st.converged) throw SolverError("poincare_constant: inner CG did not converge");
        const double xy = dot(x, y);
        const double yy = dot(y, y);
        if (yy <= 0.0) throw SolverError("poincare_constant: power iteration collapsed");
        lambda = xy / yy;  // Rayleigh quotient of L at y, using L y = x
        const double nrm = std::sqrt(yy);
        x = y;
        scale(x, 1.0 / nrm);
        if (lambda_prev > 0.0 && std::abs(lambda - lambda_prev) <= eig_tol * lambda) break;
        lambda_prev = lambda;
        if (it + 1 == max_power_iters)
            throw SolverError("poincare_constant: eigenvalue iteration did not settle");
    }
    return 1.0 / std::sqrt(lambda);
}

struct KornReport {
    double max_ratio = 0.0;       // ||grad u|| / ||Du||
    double max_identity_residual = 0.0;  // | ||grad||^2 - 2||D||^2 + ||div||^2 | / ||grad||^2
    int samples = 0;
    bool pass(double slack = 0.05) const { return max_ratio <= std::sqrt(2.0) + slack; }
};

namespace detail {

// Chebyshev distance (in cells) to the nearest solid cell, by BFS.
inline Array3<int> solid_distance(const DomainMask& mask) {
    const GridDims d = mask.dims;
    Array3<int> dist(d, -1);
    std::deque<std::array<int, 3>> queue;
    for (int i = 0; i < d.nx; ++i)
        for (int j = 0; j < d.ny; ++j)
            for (int k = 0; k < d.nz; ++k)
                if (mask.solid(i, j, k)) {
                    dist(i, j, k) = 0;
                    queue.push_back({i, j, k});
                }
    while (!queue.empty()) {
        auto [i, j, k] = queue.front();
        queue.pop_front();
        const int base = dist(i, j, k);
        for (int c = 0; c < 3; ++c)
            for (int s : {-1, 1}) {
                const int ii = wrap(i + (c == 0 ? s : 0), d.nx);
                const int jj = wrap(j + (c == 1 ? s : 0), d.ny);
                const int kk = wrap(k + (c == 2 ? s : 0), d.nz);
                if (dist(ii, jj, kk) < 0) {
                    dist(ii, jj, kk) = base + 1;
                    queue.push_back({ii, jj, kk});
                }
            }
    }
    return dist;
}

// Smooth cutoff vanishing on solid-adjacent faces, from the distance field.
inline Field3 smooth_cutoff(const DomainMask& mask, int width_cells) {
    const auto dist = solid_distance(mask);
    const GridDims d = mask.dims;
    Field3 chi(d);
    for (int i = 0; i < d.nx; ++i)
        for (int j = 0; j < d.ny; ++j)
            for (int k = 0; k < d.nz; ++k) {
                const double t = std::clamp(static_cast<double>(dist(i, j, k)) / width_cells, 0.0, 1.0);
                chi(i, j, k) = t * t * (3.0 - 2.0 * t);
            }
    return chi;
}

inline MacField random_smooth_zero_bc(const DomainMask& mask, const Field3& chi, Rng& rng,
                                      int max_mode = 3) {
    const GridDims d = mask.dims;
    const double h = mask.h;
    // a handful of random low modes per component
    struct Mode {
        double k[3];
        double amp, phase_x, phase_y, phase_z;
    };
    std::vector<Mode> modes[3];
    for (int c = 0; c < 3; ++c)
        for (int t = 0; t < 4; ++t) {
            Mode mo;
            for (int a = 0; a < 3; ++a)
                mo.k[a] = 2.0 * M_PI * (1 + static_cast<int>(rng.uniform() * max_mode));
            mo.amp = rng.normal();
            mo.phase_x = rng.uniform(0.0, 2.0 * M_PI);
            mo.phase_y = rng.uniform(0.0, 2.0 * M_PI);
            mo.phase_z = rng.uniform(0.0, 2.0 * M_PI);
            modes[c].push_back(mo);
        }
    auto eval = [&](int c, const Vec3& x) {
        double v = 0.0;
        for (const auto& mo : modes[c])
            v += mo.amp * std::sin(mo.k[0] * x.x + mo.phase_x) * std::sin(mo.k[1] * x.y + mo.phase_y) *
                 std::sin(mo.k[2] * x.z + mo.phase_z);
        return v;
    };
    MacField u(d);
    for (int i = 0; i < d.nx; ++i)
        for (int j = 0; j < d.ny; ++j)
            for (int k = 0; k < d.nz; ++k) {
                const double cx = 0.5 * (chi(i, j, k) + chi.at(i - 1, j, k));
                const double cy = 0.5 * (chi(i, j, k) + chi.at(i, j - 1, k));
                const double cz = 0.5 * (chi(i, j, k) + chi.at(i, j, k - 1));
                u.comp[0](i, j, k) = cx * eval(0, {i * h, (j + 0.5) * h, (k + 0.5) * h});
                u.comp[1](i, j, k) = cy * eval(1, {(i + 0.5) * h, j * h, (k + 0.5) * h});
                u.comp[2](i, j, k) = cz * eval(2, {(i + 0.5) * h, (j + 0.5) * h, k * h});
            }
    zero_fixed_faces(u, mask);
    return u;
}

}  // namespace detail

inline KornReport korn_identity_check(const DomainMask& mask, int n_samples, std::uint64_t seed,
                                      int cutoff_width_cells = 4) {
    KornReport rep;
    Rng rng(seed);
    const Field3 chi = detail::smooth_cutoff(mask, cutoff_width_cells);
    StrainField D(mask.dims);
    Field3 div(mask.dims);
    while (rep.samples < n_samples) {
        MacField u = detail::random_smooth_zero_bc(mask, chi, rng);
        strain(u, mask.h, D);
        const double d2 = strain_lq_pow(D, mask.h, 2.0);
        if (std::sqrt(d2) < 1e-8) continue;  // degenerate draw
        const double g2 = gradient_lq_pow(u, mask.h, 2.0);
        divergence(u, mask.h, div);
        const double v2 = dot(div, div) * std::pow(mask.h, 3);
        rep.max_ratio = std::max(rep.max_ratio, std::sqrt(g2 / d2));
        rep.max_identity_residual =
            std::max(rep.max_identity_residual, std::abs(g2 - 2.0 * d2 + v2) / g2);
        ++rep.samples;
    }
    return rep;
}

struct BogovskiiReport {
    double max_ratio = 0.0;  // ||grad Phi||_2 / ||g||_2
    int samples = 0;
};

// Lower-bound probe of the divergence right inverse: for sampled zero-mean g,
// the minimum-energy Phi with div Phi = g, Phi = 0 on holes, solved by the
// same saddle-point machinery as the flow.
inline BogovskiiReport bogovskii_norm_probe(const DomainMask& mask, int n_samples,
                                            std::uint64_t seed, double tol = 1e-9) {
    BogovskiiReport rep;
    Rng rng(seed);
    SaddleParams prm;
    prm.visc_coeff = 1.0;
    prm.gamma = 1.0;
    prm.mu_hint = mask.all_fluid() ? 0.0 : 4.0 * M_PI * std::cbrt(1.0 - mask.porosity);
    prm.tol = tol;
    prm.max_iter = 6000;
    SaddleSolver solver(mask, prm);
    solver.set_constant_viscosity(2.0);  // -Delta form: energy is ||grad Phi||^2

    const GridDims d = mask.dims;
    while (rep.samples < n_samples) {
        Field3 g(d);
        // band-limited random scalar restricted to the fluid, zero-mean
        double kx = 2.0 * M_PI * (1 + static_cast<int>(rng.uniform() * 3));
        double ky = 2.0 * M_PI * (1 + static_cast<int>(rng.uniform() * 3));
        double kz = 2.0 * M_PI * (1 + static_cast<int>(rng.uniform() * 3));
        const double a1 = rng.normal(), a2 = rng.normal();
        const double p1 = rng.uniform(0.0, 2 * M_PI), p2 = rng.uniform(0.0, 2 * M_PI);
        for (int i = 0; i < d.nx; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    const double x = (i + 0.5) * mask.h, y = (j + 0.5) * mask.h,
                                 z = (k + 0.5) * mask.h;
                    g(i, j, k) = a1 * std::sin(kx * x + p1) * std::cos(ky * y) +
                                 a2 * std::cos(kz * z + p2) * std::sin(ky * y);
                }
        zero_solid_cells(g, mask);
        remove_fluid_mean(g, mask);
        const double gn = l2_norm(g, mask.h);
        if (gn < 1e-10) continue;

        MacField phi(d);
        phi.fill(0.0);
        Field3 p(d);
        auto stats = solver.solve(MacField(d), g, phi, p);
        if (!stats.converged)
            throw SolverError("bogovskii_norm_probe: inner solve failed", stats.history);
        const double ratio = gradient_lq_norm(phi, mask.h, 2.0) / gn;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        ++rep.samples;
    }
    return rep;
}

}  // namespace porelab
