#pragma once

#include <cmath>
#include <vector>

#include "porelab/core/error.hpp"
#include "porelab/core/vec.hpp"
#include "porelab/fft/fft3.hpp"
#include "porelab/flowsolver.hpp"

namespace porelab {

// Finite trigonometric expansion of a periodic vector field on the unit torus:
//   f(x) = constant + sum_m [ cos_amp cos(2 pi m.x) + sin_amp sin(2 pi m.x) ].
struct BandLimitedField {
    struct Mode {
        int m[3] = {0, 0, 0};
        Vec3 cos_amp, sin_amp;
    };
    Vec3 constant;
    std::vector<Mode> modes;

    Vec3 eval(const Vec3& x) const {
        Vec3 v = constant;
        for (const auto& mode : modes) {
            const double phase = 2.0 * M_PI * (mode.m[0] * x.x + mode.m[1] * x.y + mode.m[2] * x.z);
            v = v + mode.cos_amp * std::cos(phase) + mode.sin_amp * std::sin(phase);
        }
        return v;
    }

    ForcingFn as_fn() const {
        BandLimitedField copy = *this;
        return [copy](const Vec3& x) { return copy.eval(x); };
    }

    int max_mode() const {
        int mm = 0;
        for (const auto& mode : modes)
            for (int c = 0; c < 3; ++c) mm = std::max(mm, std::abs(mode.m[c]));
        return mm;
    }
};

struct ScalarModes {
    struct Mode {
        int m[3] = {0, 0, 0};
        double cos_amp = 0.0, sin_amp = 0.0;
    };
    std::vector<Mode> modes;  // zero-mean: no constant term

    double eval(const Vec3& x) const {
        double v = 0.0;
        for (const auto& mode : modes) {
            const double phase = 2.0 * M_PI * (mode.m[0] * x.x + mode.m[1] * x.y + mode.m[2] * x.z);
            v += mode.cos_amp * std::cos(phase) + mode.sin_amp * std::sin(phase);
        }
        return v;
    }

    int max_mode() const {
        int mm = 0;
        for (const auto& mode : modes)
            for (int c = 0; c < 3; ++c) mm = std::max(mm, std::abs(mode.m[c]));
        return mm;
    }
};

// Named forcing presets used by the experiment configs.
inline BandLimitedField forcing_constant(const Vec3& f0) {
    BandLimitedField f;
    f.constant = f0;
    return f;
}

// A transverse oscillation plus a gradient part, so both the Darcy velocity
// and pressure are nontrivial.
inline BandLimitedField forcing_single_mode(double amplitude = 1.0) {
    BandLimitedField f;
    BandLimitedField::Mode a;
    a.m[1] = 1;  // cos(2 pi y) e_x: solenoidal, drives u
    a.cos_amp = {amplitude, 0.0, 0.0};
    f.modes.push_back(a);
    BandLimitedField::Mode b;
    b.m[0] = 1;  // cos(2 pi x) e_x: a gradient, absorbed by p
    b.cos_amp = {0.5 * amplitude, 0.0, 0.0};
    f.modes.push_back(b);
    return f;
}

// Band-limited bump: separable raised-cosine profile up to |m| <= 2.
inline BandLimitedField forcing_smooth_bump(double amplitude = 1.0) {
    BandLimitedField f;
    f.constant = {0.25 * amplitude, 0.0, 0.0};
    for (int m = 1; m <= 2; ++m) {
        BandLimitedField::Mode mode;
        mode.m[0] = m;
        mode.cos_amp = {amplitude * (m == 1 ? 0.5 : 0.25), 0.0, 0.0};
        f.modes.push_back(mode);
        BandLimitedField::Mode my;
        my.m[1] = m;
        my.cos_amp = {0.0, amplitude * (m == 1 ? 0.35 : 0.15), 0.0};
        f.modes.push_back(my);
    }
    return f;
}

// Exact solution of the Darcy system
//   (eta0/2) M0 u = f - grad p,  div u = 0,  mean(p) = 0
// in closed form per Fourier mode; the reference is band-limited so sampling
// anywhere (cells, MAC faces) is exact to rounding.
struct DarcySolution {
    Mat3 M0;
    double eta0 = 1.0;
    BandLimitedField u;
    ScalarModes p;

    Vec3 velocity_at(const Vec3& x) const { return u.eval(x); }
    double pressure_at(const Vec3& x) const { return p.eval(x); }

    MacField velocity_faces(GridDims d, double h) const {
        return sample_forcing(u.as_fn(), d, h);
    }

    Field3 pressure_cells(GridDims d, double h) const {
        Field3 out(d);
        parallel_for_slabs(d.nx, [&](int ib, int ie) {
            for (int i = ib; i < ie; ++i)
                for (int j = 0; j < d.ny; ++j)
                    for (int k = 0; k < d.nz; ++k)
                        out(i, j, k) = p.eval({(i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h});
        });
        return out;
    }
};

inline DarcySolution solve_darcy(const Mat3& M0, double eta0, const BandLimitedField& f) {
    if (!M0.symmetric(1e-8)) throw ValidationError("solve_darcy: M0 must be symmetric");
    const auto ev = sym_eigenvalues(M0);
    if (!(ev[0] > 0.0)) throw ValidationError("solve_darcy: M0 must be positive definite");
    if (!(eta0 > 0.0)) throw ValidationError("solve_darcy: eta0 must be positive");

    const Mat3 K = M0.inverse() * (2.0 / eta0);
    DarcySolution sol;
    sol.M0 = M0;
    sol.eta0 = eta0;
    sol.u.constant = K * f.constant;  // constants are divergence-free on the torus
    for (const auto& mode : f.modes) {
        const Vec3 k{2.0 * M_PI * mode.m[0], 2.0 * M_PI * mode.m[1], 2.0 * M_PI * mode.m[2]};
        const double kKk = k.dot(K * k);
        if (kKk <= 0.0) {
            sol.u.constant = sol.u.constant + K * mode.cos_amp;  // m = 0 stored as a mode
            continue;
        }
        const double p_sin = k.dot(K * mode.cos_amp) / kKk;
        const double p_cos = -k.dot(K * mode.sin_amp) / kKk;
        BandLimitedField::Mode um;
        um.m[0] = mode.m[0];
        um.m[1] = mode.m[1];
        um.m[2] = mode.m[2];
        um.cos_amp = K * (mode.cos_amp - k * p_sin);
        um.sin_amp = K * (mode.sin_amp + k * p_cos);
        sol.u.modes.push_back(um);
        if (p_cos != 0.0 || p_sin != 0.0) {
            ScalarModes::Mode pm;
            pm.m[0] = mode.m[0];
            pm.m[1] = mode.m[1];
            pm.m[2] = mode.m[2];
            pm.cos_amp = p_cos;
            pm.sin_amp = p_sin;
            sol.p.modes.push_back(pm);
        }
    }
    return sol;
}

// Manufactured check: pick (u*, p*), build f = (eta0/2) M0 u* + grad p*, solve,
// and return the combined sampling error on an n^3 grid.
inline double darcy_manufactured_check(const Mat3& M0, double eta0, const BandLimitedField& u_star,
                                       const ScalarModes& p_star, int n) {
    const int nyq = n / 2 - 1;
    if (u_star.max_mode() > nyq || p_star.max_mode() > nyq)
        throw ValidationError("darcy_manufactured_check: fields exceed the grid band limit");
    for (const auto& m : u_star.modes) {
        const Vec3 k{2.0 * M_PI * m.m[0], 2.0 * M_PI * m.m[1], 2.0 * M_PI * m.m[2]};
        if (std::abs(k.dot(m.cos_amp)) + std::abs(k.dot(m.sin_amp)) > 1e-12)
            throw ValidationError("darcy_manufactured_check: u* must be divergence-free");
    }

    BandLimitedField f;
    const Mat3 A = M0 * (0.5 * eta0);
    f.constant = A * u_star.constant;
    for (const auto& m : u_star.modes) {
        BandLimitedField::Mode fm;
        for (int c = 0; c < 3; ++c) fm.m[c] = m.m[c];
        fm.cos_amp = A * m.cos_amp;
        fm.sin_amp = A * m.sin_amp;
        f.modes.push_back(fm);
    }
    for (const auto& m : p_star.modes) {
        const Vec3 k{2.0 * M_PI * m.m[0], 2.0 * M_PI * m.m[1], 2.0 * M_PI * m.m[2]};
        BandLimitedField::Mode fm;
        for (int c = 0; c < 3; ++c) fm.m[c] = m.m[c];
        // grad(p_c cos + p_s sin) = -p_c k sin + p_s k cos
        fm.cos_amp = k * m.sin_amp;
        fm.sin_amp = k * (-m.cos_amp);
        bool merged = false;
        for (auto& existing : f.modes)
            if (existing.m[0] == fm.m[0] && existing.m[1] == fm.m[1] && existing.m[2] == fm.m[2]) {
                existing.cos_amp = existing.cos_amp + fm.cos_amp;
                existing.sin_amp = existing.sin_amp + fm.sin_amp;
                merged = true;
                break;
            }
        if (!merged) f.modes.push_back(fm);
    }

    const auto sol = solve_darcy(M0, eta0, f);
    const double h = 1.0 / n;
    double err2 = 0.0, perr2 = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const Vec3 x{(i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h};
                const Vec3 du = sol.velocity_at(x) - u_star.eval(x);
                err2 += du.dot(du);
                const double dp = sol.pressure_at(x) - p_star.eval(x);
                perr2 += dp * dp;
            }
    const double vol = h * h * h;
    return std::sqrt(err2 * vol) + std::sqrt(perr2 * vol);
}

// Grid-data path: f given as three cell-centered components; solved with true
// spectral derivatives. Used by the CLI when a forcing file is supplied.
struct DarcyGridSolution {
    Field3 u[3];
    Field3 p;
};

inline DarcyGridSolution solve_darcy_grid(const Mat3& M0, double eta0, const Field3 f_cells[3]) {
    const GridDims d = f_cells[0].dims();
    Fft3 fft(d);
    const Mat3 K = M0.inverse() * (2.0 / eta0);
    std::vector<std::complex<double>> fs[3], ps;
    for (int c = 0; c < 3; ++c) fft.forward(f_cells[c], fs[c]);
    ps.resize(fft.spectral_size());

    const int nzc = fft.nzc();
    for (int i = 0; i < d.nx; ++i)
        for (int j = 0; j < d.ny; ++j)
            for (int k = 0; k < nzc; ++k) {
                const std::size_t idx = (static_cast<std::size_t>(i) * d.ny + j) * nzc + k;
                const Vec3 kv{2.0 * M_PI * freq_of(i, d.nx), 2.0 * M_PI * freq_of(j, d.ny),
                              2.0 * M_PI * freq_of(k, d.nz)};
                const double kKk = kv.dot(K * kv);
                std::complex<double> fhat[3] = {fs[0][idx], fs[1][idx], fs[2][idx]};
                if (kKk <= 0.0) {
                    ps[idx] = 0.0;
                    for (int c = 0; c < 3; ++c) {
                        Vec3 col{K(c, 0), K(c, 1), K(c, 2)};
                        fs[c][idx] = col.x * fhat[0] + col.y * fhat[1] + col.z * fhat[2];
                    }
                    continue;
                }
                // p_hat = (k . K f_hat) / (i k.Kk); u_hat = K(f_hat - i k p_hat)
                std::complex<double> kKf = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const Vec3 row{K(c, 0), K(c, 1), K(c, 2)};
                    kKf += kv[c] * (row.x * fhat[0] + row.y * fhat[1] + row.z * fhat[2]);
                }
                const std::complex<double> phat = kKf / std::complex<double>(0.0, kKk);
                std::complex<double> g[3];
                for (int c = 0; c < 3; ++c)
                    g[c] = fhat[c] - std::complex<double>(0.0, kv[c]) * phat;
                for (int c = 0; c < 3; ++c) {
                    const Vec3 row{K(c, 0), K(c, 1), K(c, 2)};
                    fs[c][idx] = row.x * g[0] + row.y * g[1] + row.z * g[2];
                }
                ps[idx] = phat;
            }

    DarcyGridSolution sol;
    for (int c = 0; c < 3; ++c) {
        sol.u[c] = Field3(d);
        fft.inverse(fs[c], sol.u[c]);
    }
    sol.p = Field3(d);
    fft.inverse(ps, sol.p);
    return sol;
}

}  // namespace porelab
