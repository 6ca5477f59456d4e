#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "porelab/core/error.hpp"
#include "porelab/fft/fft3.hpp"
#include "porelab/stokes/mac_ops.hpp"

namespace porelab {

struct SaddleParams {
    double visc_coeff = 1.0;  // multiplies -div(eta D u)
    double mass_coeff = 0.0;  // multiplies u (implicit-Euler mass term)
    double gamma = 0.0;       // augmented-Lagrangian grad-div penalty
    double mu_hint = 0.0;     // Darcy-drag density estimate, preconditioner only
    double tol = 1e-10;       // relative preconditioned residual
    int max_iter = 4000;
};

struct SaddleStats {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
    std::vector<double> history;
};

// Symmetric saddle-point solve on the masked MAC grid,
//   [ A + gamma D^T D   G  ] [u]   [b_u + gamma D^T g]
//   [ G^T               0  ] [p] = [ -g ]
// with A = visc_coeff (-div(eta D .)) + mass_coeff I and G^T = -D, i.e. the
// velocity satisfies div u = g on fluid cells and Dirichlet data on fixed
// faces. Solved by preconditioned MINRES; the preconditioner inverts the
// constant-coefficient momentum symbol exactly in Fourier space (with a
// Darcy-drag shift modeling the holes) and applies a Cahouet-Chabard pressure
// block. The mask enters through subspace projections.
class SaddleSolver {
  public:
    struct State {
        MacField u;
        Field3 p;
        State() = default;
        explicit State(GridDims d) : u(d), p(d) {}
        void zero() {
            u.fill(0.0);
            p.fill(0.0);
        }
    };

    SaddleSolver(const DomainMask& mask, SaddleParams params)
        : mask_(&mask),
          p_(params),
          d_(mask.dims),
          h_(mask.h),
          fft_(mask.dims),
          sym_(mask.dims, mask.h),
          strain_work_(mask.dims),
          div_work_(mask.dims) {
        for (auto& v : vecs_) v = State(d_);
        for (auto& s : spec_) s.resize(fft_.spectral_size());
    }

    void set_viscosity(ViscosityField eta) {
        eta_ = std::move(eta);
        eta_bar_ = fluid_mean(eta_.cell);
    }

    void set_constant_viscosity(double value) {
        constant_viscosity(d_, value, eta_);
        eta_bar_ = value;
    }

    const ViscosityField& viscosity() const { return eta_; }
    double eta_bar() const { return eta_bar_; }
    SaddleParams& params() { return p_; }

    // On entry u carries Dirichlet data on fixed faces (zero for plain holes);
    // on exit (u, p) solve the system, p with zero fluid mean.
    SaddleStats solve(const MacField& rhs_u, const Field3& rhs_div, MacField& u, Field3& p) {
        State& x = vecs_[0];
        State& r1 = vecs_[1];
        State& r2 = vecs_[2];
        State& v = vecs_[3];
        State& y = vecs_[4];
        State& t = vecs_[5];
        State& w = vecs_[6];
        State& w1 = vecs_[7];
        State& w2 = vecs_[8];

        // r1 = Pi(rhs - K x_lift) is the initial residual for x = 0.
        r1.u = rhs_u;
        if (p_.gamma != 0.0) gradient_add(rhs_div, h_, -p_.gamma, r1.u);
        r1.p = rhs_div;
        scale(r1.p, -1.0);
        t.u = u;
        keep_fixed_only(t.u);
        t.p.fill(0.0);
        apply_raw(t, y);
        axpy(-1.0, y.u, r1.u);
        axpy(-1.0, y.p, r1.p);
        project(r1);

        SaddleStats stats;
        x.zero();
        precondition(r1, y);
        const double beta1 = std::sqrt(std::max(0.0, dot_state(r1, y)));
        if (beta1 == 0.0) {
            stats.converged = true;
            finalize(u, p, x);
            return stats;
        }

        double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0;
        double phibar = beta1, cs = -1.0, sn = 0.0;
        w.zero();
        w1.zero();
        w2.zero();
        r2 = r1;

        int it = 0;
        while (it < p_.max_iter) {
            ++it;
            // Lanczos step
            v = y;
            scale_state(v, 1.0 / beta);
            apply_raw(v, t);
            project(t);
            if (it >= 2) {
                axpy(-beta / oldb, r1.u, t.u);
                axpy(-beta / oldb, r1.p, t.p);
            }
            const double alfa = dot_state(v, t);
            axpy(-alfa / beta, r2.u, t.u);
            axpy(-alfa / beta, r2.p, t.p);
            std::swap(r1, r2);
            std::swap(r2, t);
            precondition(r2, y);
            oldb = beta;
            beta = std::sqrt(std::max(0.0, dot_state(r2, y)));

            // previous plane rotation
            const double oldeps = epsln;
            const double delta = cs * dbar + sn * alfa;
            const double gbar = sn * dbar - cs * alfa;
            epsln = sn * beta;
            dbar = -cs * beta;
            double gam = std::sqrt(gbar * gbar + beta * beta);
            gam = std::max(gam, 1e-300);
            cs = gbar / gam;
            sn = beta / gam;
            const double phi = cs * phibar;
            phibar = sn * phibar;

            // direction update w_k = (v - oldeps w_{k-2} - delta w_{k-1})/gam
            std::swap(w1, w2);  // w2 <- w_{k-2}
            std::swap(w, w1);   // w1 <- w_{k-1}, w free
            w = v;
            axpy(-oldeps, w2.u, w.u);
            axpy(-oldeps, w2.p, w.p);
            axpy(-delta, w1.u, w.u);
            axpy(-delta, w1.p, w.p);
            scale_state(w, 1.0 / gam);
            axpy(phi, w.u, x.u);
            axpy(phi, w.p, x.p);

            const double rel = phibar / beta1;
            stats.history.push_back(rel);
            if (rel <= p_.tol) break;
        }

        stats.iterations = it;
        stats.rel_residual = stats.history.empty() ? 0.0 : stats.history.back();
        stats.converged = stats.rel_residual <= p_.tol;
        finalize(u, p, x);
        return stats;
    }

    // out = Pi(rhs_u - A u - G p), momentum residual without the AL term.
    void momentum_residual(const MacField& u, const Field3& p, const MacField& rhs_u, MacField& out) {
        State in(d_), res(d_);
        in.u = u;
        in.p = p;
        const double g = p_.gamma;
        p_.gamma = 0.0;
        apply_raw(in, res);
        p_.gamma = g;
        out = rhs_u;
        axpy(-1.0, res.u, out);
        zero_fixed_faces(out, *mask_);
    }

  private:
    void scale_state(State& s, double a) {
        scale(s.u, a);
        scale(s.p, a);
    }

    double dot_state(const State& a, const State& b) { return dot(a.u, b.u) + dot(a.p, b.p); }

    double fluid_mean(const Field3& f) const {
        double s = 0;
        long long cnt = 0;
        for (int i = 0; i < d_.nx; ++i)
            for (int j = 0; j < d_.ny; ++j)
                for (int k = 0; k < d_.nz; ++k)
                    if (!mask_->solid(i, j, k)) {
                        s += f(i, j, k);
                        ++cnt;
                    }
        return cnt ? s / cnt : 1.0;
    }

    void keep_fixed_only(MacField& u) {
        for (int c = 0; c < 3; ++c) {
            double* pu = u.comp[c].data();
            const std::uint8_t* pm = mask_->face_solid[c].data();
            const long long n = static_cast<long long>(u.comp[c].size());
            const long long per = n / d_.nx;
            parallel_for_slabs(d_.nx, [&](int b, int e) {
                for (long long i = b * per; i < e * per; ++i)
                    if (!pm[i]) pu[i] = 0.0;
            });
        }
    }

    void project(State& s) {
        zero_fixed_faces(s.u, *mask_);
        zero_solid_cells(s.p, *mask_);
        remove_fluid_mean(s.p, *mask_);
        if (mask_->all_fluid() && p_.mass_coeff == 0.0) remove_component_means(s.u);
    }

    // K without projections; reads u as-is including fixed faces.
    void apply_raw(const State& in, State& out) {
        out.u.fill(0.0);
        viscous_apply(in.u, eta_, h_, p_.visc_coeff, strain_work_, out.u);
        if (p_.gamma != 0.0) grad_div_apply(in.u, h_, p_.gamma, div_work_, out.u);
        if (p_.mass_coeff != 0.0) axpy(p_.mass_coeff, in.u, out.u);
        gradient_add(in.p, h_, 1.0, out.u);
        divergence(in.u, h_, out.p);
        scale(out.p, -1.0);
    }

    // z = M^{-1} r, block-diagonal in Fourier space.
    void precondition(const State& r, State& z) {
        const double nu = p_.visc_coeff * eta_bar_;
        const double shift = p_.mass_coeff + p_.mu_hint;
        const int nx = d_.nx, ny = d_.ny, nzc = fft_.nzc();

        for (int c = 0; c < 3; ++c) fft_.forward(r.u.comp[c], spec_[c]);
        parallel_for_slabs(nx, [&](int ib, int ie) {
            for (int i = ib; i < ie; ++i)
                for (int j = 0; j < ny; ++j)
                    for (int k = 0; k < nzc; ++k) {
                        const std::size_t idx = (static_cast<std::size_t>(i) * ny + j) * nzc + k;
                        const double w2 = sym_.g2[0][i] + sym_.g2[1][j] + sym_.g2[2][k];
                        const double a = 0.5 * nu * w2 + shift;
                        std::complex<double> rv[3] = {spec_[0][idx], spec_[1][idx], spec_[2][idx]};
                        if (a <= 0.0) {
                            spec_[0][idx] = spec_[1][idx] = spec_[2][idx] = 0.0;
                            continue;
                        }
                        const std::complex<double> wv[3] = {sym_.g[0][i], sym_.g[1][j], sym_.g[2][k]};
                        const std::complex<double> dbar[3] = {std::conj(sym_.d[0][i]),
                                                              std::conj(sym_.d[1][j]),
                                                              std::conj(sym_.d[2][k])};
                        solve_rank2(a, 0.5 * nu, wv, p_.gamma, dbar, rv);
                        spec_[0][idx] = rv[0];
                        spec_[1][idx] = rv[1];
                        spec_[2][idx] = rv[2];
                    }
        });
        for (int c = 0; c < 3; ++c) fft_.inverse(spec_[c], z.u.comp[c]);

        fft_.forward(r.p, spec_[0]);
        parallel_for_slabs(nx, [&](int ib, int ie) {
            for (int i = ib; i < ie; ++i)
                for (int j = 0; j < ny; ++j)
                    for (int k = 0; k < nzc; ++k) {
                        const std::size_t idx = (static_cast<std::size_t>(i) * ny + j) * nzc + k;
                        const double w2 = sym_.g2[0][i] + sym_.g2[1][j] + sym_.g2[2][k];
                        if (w2 <= 0.0) {
                            spec_[0][idx] = 0.0;
                            continue;
                        }
                        spec_[0][idx] *= (0.5 * nu + p_.gamma) + shift / w2;
                    }
        });
        fft_.inverse(spec_[0], z.p);
        project(z);
    }

    // Solves (a I + b1 u1 u1^H + b2 u2 u2^H) x = r in place.
    static void solve_rank2(double a, double b1, const std::complex<double> u1[3], double b2,
                            const std::complex<double> u2[3], std::complex<double> r[3]) {
        using C = std::complex<double>;
        C u1r = 0, u2r = 0, u11 = 0, u12 = 0, u22 = 0;
        for (int c = 0; c < 3; ++c) {
            u1r += std::conj(u1[c]) * r[c];
            u2r += std::conj(u2[c]) * r[c];
            u11 += std::conj(u1[c]) * u1[c];
            u12 += std::conj(u1[c]) * u2[c];
            u22 += std::conj(u2[c]) * u2[c];
        }
        if (b1 != 0.0 && b2 != 0.0) {
            const C c11 = 1.0 / b1 + u11 / a;
            const C c12 = u12 / a;
            const C c22 = 1.0 / b2 + u22 / a;
            const C det = c11 * c22 - c12 * std::conj(c12);
            const C s1 = u1r / a, s2 = u2r / a;
            const C t1 = (c22 * s1 - c12 * s2) / det;
            const C t2 = (c11 * s2 - std::conj(c12) * s1) / det;
            for (int c = 0; c < 3; ++c) r[c] = (r[c] - u1[c] * t1 - u2[c] * t2) / a;
        } else if (b1 != 0.0) {
            const C t = (u1r / a) / (1.0 / b1 + u11 / a);
            for (int c = 0; c < 3; ++c) r[c] = (r[c] - u1[c] * t) / a;
        } else if (b2 != 0.0) {
            const C t = (u2r / a) / (1.0 / b2 + u22 / a);
            for (int c = 0; c < 3; ++c) r[c] = (r[c] - u2[c] * t) / a;
        } else {
            for (int c = 0; c < 3; ++c) r[c] /= a;
        }
    }

    void finalize(MacField& u, Field3& p, const State& x) {
        keep_fixed_only(u);
        axpy(1.0, x.u, u);
        p = x.p;
        remove_fluid_mean(p, *mask_);
    }

    const DomainMask* mask_;
    SaddleParams p_;
    GridDims d_;
    double h_;
    Fft3 fft_;
    DiffSymbols sym_;
    ViscosityField eta_;
    double eta_bar_ = 1.0;
    StrainField strain_work_;
    Field3 div_work_;
    State vecs_[9];
    std::vector<std::complex<double>> spec_[3];
};

}  // namespace porelab
