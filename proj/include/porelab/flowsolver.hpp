#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "porelab/constitutive.hpp"
#include "porelab/core/error.hpp"
#include "porelab/geometry.hpp"
#include "porelab/stokes/poisson.hpp"
#include "porelab/stokes/saddle.hpp"

namespace porelab {

// Velocity/pressure state on the masked MAC grid; u vanishes on solid and
// solid-adjacent faces, p has zero fluid mean.
struct StaggeredField {
    MacField u;
    Field3 p;
    double h = 0.0;

    StaggeredField() = default;
    explicit StaggeredField(GridDims d, double h) : u(d), p(d), h(h) {}
};

using ForcingFn = std::function<Vec3(const Vec3&)>;

struct SolveConfig {
    double lambda = 3.0;  // inertia exponent, must exceed alpha
    ViscosityLaw law = ViscosityLaw::newtonian(1.0);
    ForcingFn forcing;
    double tol = 1e-8;
    int max_iter = 40;
    // evolutionary runs
    double dt = 0.0;
    double t_end = 0.0;

    void validate(double alpha) const {
        if (!(lambda > alpha)) throw ValidationError("SolveConfig: lambda must exceed alpha");
        if (!(tol > 0.0)) throw ValidationError("SolveConfig: tol must be positive");
    }
};

struct SolveDiagnostics {
    std::vector<double> picard_residuals;
    int picard_iterations = 0;
    int inner_iterations_total = 0;
    double energy_lhs = 0.0;   // eps^{3-a} int eta(eps^{3-a}|Du|) |Du|^2
    double energy_rhs = 0.0;   // int f . u
    double grad_l2_scaled = 0.0;   // eps^{(3-a)/2} ||grad u||_2
    double l2 = 0.0;               // ||u||_2
    double grad_lr_scaled = 0.0;   // eps^{(3-a)(r-1)/r} ||grad u||_r (r > 2 only)
    bool converged = false;
};

inline MacField sample_forcing(const ForcingFn& f, GridDims d, double h) {
    MacField out(d);
    if (!f) return out;
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    out.comp[0](i, j, k) = f({i * h, (j + 0.5) * h, (k + 0.5) * h}).x;
                    out.comp[1](i, j, k) = f({(i + 0.5) * h, j * h, (k + 0.5) * h}).y;
                    out.comp[2](i, j, k) = f({(i + 0.5) * h, (j + 0.5) * h, k * h}).z;
                }
    });
    return out;
}

// Zero extension: returns the field with exact zeros on solid/fixed entries.
inline StaggeredField extend_by_zero(const StaggeredField& f, const DomainMask& mask) {
    StaggeredField out = f;
    zero_fixed_faces(out.u, mask);
    zero_solid_cells(out.p, mask);
    return out;
}

struct EnergyResidual {
    double value = 0.0;
    bool degenerate = false;
};

namespace detail {

inline double viscous_dissipation(const MacField& u, const ViscosityLaw& law, double beta,
                                  double visc_coeff, double h, StrainField& D, Field3& mag2) {
    strain(u, h, D);
    const GridDims d = u.dims();
    if (mag2.dims() != d) mag2 = Field3(d);
    // diagonal family at cells with cell viscosity, off-diagonals with edge
    // viscosity reconstructed the same way the operator does
    ViscosityField eta;
    viscosity_from_strain(D, law, beta, eta, mag2);
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double* pd = D.diag[c].data();
        const double* pe = eta.cell.data();
        for (std::size_t i = 0; i < D.diag[c].size(); ++i) s += pe[i] * pd[i] * pd[i];
        const double* po = D.off[c].data();
        const double* pe2 = eta.edge[c].data();
        for (std::size_t i = 0; i < D.off[c].size(); ++i) s += 2.0 * pe2[i] * po[i] * po[i];
    }
    return visc_coeff * s * h * h * h;
}

}  // namespace detail

// Stationary and evolutionary solves of the rescaled system on one mask.
// The Picard loop freezes the viscosity and the advecting velocity; each pass
// is one symmetric Stokes solve with the advection on the right-hand side.
class FlowSolver {
  public:
    FlowSolver(const PerforationSpec& spec, const DomainMask& mask, SolveConfig cfg)
        : spec_(spec), mask_(&mask), cfg_(std::move(cfg)) {
        cfg_.validate(spec.alpha);
        visc_coeff_ = std::pow(spec.epsilon, 3.0 - spec.alpha);
        adv_coeff_ = std::pow(spec.epsilon, cfg_.lambda);
        beta_ = visc_coeff_;

        SaddleParams prm;
        prm.visc_coeff = visc_coeff_;
        prm.gamma = visc_coeff_ * cfg_.law.eta0;
        prm.mu_hint = mu_hint();
        prm.tol = 1e-2 * cfg_.tol;
        prm.max_iter = 6000;
        solver_ = std::make_unique<SaddleSolver>(*mask_, prm);
        solver_->set_constant_viscosity(cfg_.law.eta(0.0));

        f_faces_ = sample_forcing(cfg_.forcing, mask.dims, mask.h);
        zero_fixed_faces(f_faces_, *mask_);
        f_norm_ = l2_norm(f_faces_, mask.h);
    }

    const MacField& forcing_faces() const { return f_faces_; }
    double visc_coeff() const { return visc_coeff_; }
    double adv_coeff() const { return adv_coeff_; }
    SaddleSolver& saddle() { return *solver_; }

    // Drag density of the hole array, used only to precondition.
    double mu_hint() const {
        if (spec_.hole.empty()) return 0.0;
        const double n_holes = std::pow(1.0 / spec_.epsilon, 3.0);
        const double radius = spec_.hole_radius();
        return 0.5 * cfg_.law.eta0 * 6.0 * M_PI * radius * n_holes * visc_coeff_;
    }

    SolveDiagnostics solve_stationary(StaggeredField& out) {
        const GridDims d = mask_->dims;
        const double h = mask_->h;
        solver_->params().mass_coeff = 0.0;
        solver_->params().mu_hint = mu_hint();
        out = StaggeredField(d, h);
        SolveDiagnostics diag;

        MacField rhs(d), adv(d), residual(d);
        StrainField Dwork(d);
        Field3 mag2(d);

        double prev_norm = 0.0;
        for (int it = 0; it < cfg_.max_iter; ++it) {
            // freeze eta and the advecting velocity at the previous iterate
            if (!cfg_.law.newtonian_part_only()) {
                if (it == 0) {
                    solver_->set_constant_viscosity(cfg_.law.eta(0.0));
                } else {
                    strain(out.u, h, Dwork);
                    ViscosityField eta;
                    viscosity_from_strain(Dwork, cfg_.law, beta_, eta, mag2);
                    solver_->set_viscosity(std::move(eta));
                }
            }
            rhs = f_faces_;
            if (adv_coeff_ != 0.0 && it > 0) {
                advect(out.u, out.u, h, adv);
                axpy(-adv_coeff_, adv, rhs);
            }
            zero_fixed_faces(rhs, *mask_);

            Field3 g(d, 0.0);
            auto stats = solver_->solve(rhs, g, out.u, out.p);
            diag.inner_iterations_total += stats.iterations;
            if (!stats.converged)
                throw SolverError("solve_stationary: inner saddle solve stalled", stats.history);

            const double rel = nonlinear_residual(out, Dwork, mag2, residual, adv);
            diag.picard_residuals.push_back(rel);
            diag.picard_iterations = it + 1;

            const double unorm = l2_norm(out.u, h);
            if (it > 0 && unorm > 2.0 * std::max(prev_norm, 1e-300) && prev_norm > 0.0)
                throw SolverError(
                    "solve_stationary: iterate norm doubled between Picard steps; "
                    "inertia too strong (increase lambda or reduce forcing)",
                    diag.picard_residuals);
            prev_norm = unorm;

            if (rel <= cfg_.tol) {
                diag.converged = true;
                break;
            }
            if (diag.picard_residuals.size() >= 11) {
                const double old = diag.picard_residuals[diag.picard_residuals.size() - 11];
                if (rel > 0.99 * old)
                    throw SolverError("solve_stationary: Picard stagnation", diag.picard_residuals);
            }
        }
        if (!diag.converged)
            throw SolverError("solve_stationary: Picard did not reach tolerance",
                              diag.picard_residuals);
        fill_energy(out, diag, Dwork, mag2);
        return diag;
    }

    // One implicit-Euler step; state is advanced in place. Returns the energy
    // inequality defect (should be <= solver tolerance):
    //   eps^l (||u+||^2 - ||u||^2)/(2 dt) + eps^{3-a} int eta |Du+|^2 - int f.u+
    double step_evolutionary(StaggeredField& state) {
        if (!(cfg_.dt > 0.0)) throw ValidationError("step_evolutionary: dt must be positive");
        const GridDims d = mask_->dims;
        const double h = mask_->h;
        const double mass = adv_coeff_ / cfg_.dt;  // eps^lambda / dt
        solver_->params().mass_coeff = mass;
        solver_->params().mu_hint = mu_hint() + mass;

        MacField rhs(d), adv(d), res(d);
        StrainField Dwork(d);
        Field3 mag2(d);
        const double unorm_old = l2_norm(state.u, h);
        const double scale = std::max(f_norm_, 1e-300);

        StaggeredField next = state;
        bool settled = false;
        for (int it = 0; it < cfg_.max_iter; ++it) {
            if (!cfg_.law.newtonian_part_only() && it > 0) {
                strain(next.u, h, Dwork);
                ViscosityField eta;
                viscosity_from_strain(Dwork, cfg_.law, beta_, eta, mag2);
                solver_->set_viscosity(std::move(eta));
            }
            rhs = f_faces_;
            axpy(mass, state.u, rhs);
            advect(next.u, next.u, h, adv);
            axpy(-adv_coeff_, adv, rhs);
            zero_fixed_faces(rhs, *mask_);

            Field3 g(d, 0.0);
            auto stats = solver_->solve(rhs, g, next.u, next.p);
            if (!stats.converged)
                throw SolverError("step_evolutionary: inner solve stalled", stats.history);

            // residual of the implicit system with lagged pieces re-evaluated
            if (!cfg_.law.newtonian_part_only()) {
                strain(next.u, h, Dwork);
                ViscosityField eta;
                viscosity_from_strain(Dwork, cfg_.law, beta_, eta, mag2);
                solver_->set_viscosity(std::move(eta));
            }
            rhs = f_faces_;
            axpy(mass, state.u, rhs);
            advect(next.u, next.u, h, adv);
            axpy(-adv_coeff_, adv, rhs);
            zero_fixed_faces(rhs, *mask_);
            solver_->momentum_residual(next.u, next.p, rhs, res);
            if (l2_norm(res, h) / scale <= cfg_.tol) {
                settled = true;
                break;
            }
        }
        if (!settled) throw SolverError("step_evolutionary: Picard did not settle within max_iter");

        const double unorm_new = l2_norm(next.u, h);
        const double dissipation =
            detail::viscous_dissipation(next.u, cfg_.law, beta_, visc_coeff_, h, Dwork, mag2);
        const double work = dot(f_faces_, next.u) * h * h * h;
        const double defect = adv_coeff_ * (unorm_new * unorm_new - unorm_old * unorm_old) /
                                  (2.0 * cfg_.dt) +
                              dissipation - work;
        state = std::move(next);
        return defect;
    }

    EnergyResidual energy_identity_residual(const StaggeredField& field) {
        StrainField Dwork(mask_->dims);
        Field3 mag2(mask_->dims);
        const double lhs = detail::viscous_dissipation(field.u, cfg_.law, beta_, visc_coeff_,
                                                       mask_->h, Dwork, mag2);
        const double rhs = dot(f_faces_, field.u) * std::pow(mask_->h, 3);
        EnergyResidual res;
        if (std::abs(rhs) < 1e-300) {
            res.degenerate = true;
            res.value = 0.0;
            return res;
        }
        res.value = std::abs(lhs - rhs) / std::abs(rhs);
        return res;
    }

  private:
    double nonlinear_residual(const StaggeredField& s, StrainField& Dwork, Field3& mag2,
                              MacField& res, MacField& adv) {
        // full momentum residual with the viscosity re-evaluated at s.u
        if (!cfg_.law.newtonian_part_only()) {
            strain(s.u, mask_->h, Dwork);
            ViscosityField eta;
            viscosity_from_strain(Dwork, cfg_.law, beta_, eta, mag2);
            solver_->set_viscosity(std::move(eta));
        }
        MacField rhs = f_faces_;
        if (adv_coeff_ != 0.0) {
            advect(s.u, s.u, mask_->h, adv);
            axpy(-adv_coeff_, adv, rhs);
        }
        zero_fixed_faces(rhs, *mask_);
        solver_->momentum_residual(s.u, s.p, rhs, res);
        const double scale = f_norm_ > 0.0 ? f_norm_ : 1.0;
        return l2_norm(res, mask_->h) / scale;
    }

    void fill_energy(const StaggeredField& s, SolveDiagnostics& diag, StrainField& Dwork,
                     Field3& mag2) {
        const double h = mask_->h;
        diag.energy_lhs =
            detail::viscous_dissipation(s.u, cfg_.law, beta_, visc_coeff_, h, Dwork, mag2);
        diag.energy_rhs = dot(f_faces_, s.u) * h * h * h;
        const double e = spec_.epsilon, a = spec_.alpha, r = cfg_.law.r;
        diag.l2 = l2_norm(s.u, h);
        diag.grad_l2_scaled = std::pow(e, 0.5 * (3.0 - a)) * gradient_lq_norm(s.u, h, 2.0);
        diag.grad_lr_scaled =
            r > 2.0 ? std::pow(e, (3.0 - a) * (r - 1.0) / r) * gradient_lq_norm(s.u, h, r) : 0.0;
    }

    PerforationSpec spec_;
    const DomainMask* mask_;
    SolveConfig cfg_;
    double visc_coeff_ = 1.0, adv_coeff_ = 0.0, beta_ = 1.0, f_norm_ = 0.0;
    std::unique_ptr<SaddleSolver> solver_;
    MacField f_faces_;
};

// Scaled-norm table across an epsilon sweep; per the a-priori velocity bounds.
struct UniformBoundRow {
    double epsilon = 0.0;
    double grad_l2_scaled = 0.0;
    double l2 = 0.0;
    double grad_lr_scaled = 0.0;
    bool flagged = false;  // grew by more than x2 from the previous (coarser) row
};

inline std::vector<UniformBoundRow> uniform_bound_report(const std::vector<SolveDiagnostics>& diags,
                                                         const std::vector<double>& epsilons) {
    if (diags.size() != epsilons.size() || diags.size() < 2)
        throw ValidationError("uniform_bound_report: need >= 2 sweep points");
    std::vector<UniformBoundRow> rows;
    for (std::size_t i = 0; i < diags.size(); ++i) {
        UniformBoundRow row;
        row.epsilon = epsilons[i];
        row.grad_l2_scaled = diags[i].grad_l2_scaled;
        row.l2 = diags[i].l2;
        row.grad_lr_scaled = diags[i].grad_lr_scaled;
        if (i > 0) {
            const auto& prev = rows[i - 1];
            auto grew = [](double now, double before) {
                return before > 0.0 && now > 2.0 * before;
            };
            row.flagged = grew(row.grad_l2_scaled, prev.grad_l2_scaled) ||
                          grew(row.l2, prev.l2) || grew(row.grad_lr_scaled, prev.grad_lr_scaled);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace porelab
