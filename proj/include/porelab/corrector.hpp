#pragma once

#include <cmath>
#include <string>

#include "porelab/darcy.hpp"
#include "porelab/micro.hpp"

namespace porelab {

// Oscillating test function (W, Q) assembled on a single lattice cell, the
// four-region construction: identity outside B(0, eps/2), a Stokes shell in
// B(0, eps/2) \ B(0, eps/4), the rescaled exterior solution inside B(0, eps/4),
// zero on the hole. Cell-periodic; the torus field is this cell tiled.
struct CorrectorField {
    enum Region : std::uint8_t { kId = 0, kAnnulus = 1, kRescaled = 2, kHole = 3 };

    double epsilon = 0.0, alpha = 0.0;
    int m = 0;       // cells per axis within the lattice cell
    double h = 0.0;  // = epsilon / m
    MacField W[3];   // columns W e_dir
    Field3 Q[3];
    ByteField3 region;
    double div_tolerance = 0.0;
    double max_overshoot = 0.0;

    Vec3 cell_center(int i, int j, int k) const {
        return {(i + 0.5) * h - 0.5 * epsilon, (j + 0.5) * h - 0.5 * epsilon,
                (k + 0.5) * h - 0.5 * epsilon};
    }

    Vec3 face_pos(int c, int i, int j, int k) const {
        Vec3 p = cell_center(i, j, k);
        p[c] -= 0.5 * h;
        return p;
    }
};

namespace detail {

// div repair over a custom cell set: subtract chi grad q so that div u vanishes
// on the active cells, touching only faces interior to the set.
inline double repair_divergence(MacField& u, const ByteField3& cell_active,
                                const ByteField3 face_free[3], double h, double tol) {
    const GridDims d = cell_active.dims();
    CellPoisson poisson(d, h, CellPoisson::Kind::FaceNeumann, cell_active, face_free);
    Field3 rhs(d), q(d);
    divergence(u, h, rhs);
    scale(rhs, -1.0);
    zero_where_not(rhs, cell_active);
    remove_mean_where(rhs, cell_active);
    auto st = poisson.solve(rhs, q, tol, 4000);
    if (!st.converged) throw SolverError("corrector divergence repair did not converge");
    MacField gq(d);
    gradient(q, h, gq);
    for (int c = 0; c < 3; ++c) {
        double* pu = u.comp[c].data();
        const double* pg = gq.comp[c].data();
        const std::uint8_t* pf = face_free[c].data();
        for (std::size_t i = 0; i < u.comp[c].size(); ++i)
            if (pf[i]) pu[i] -= pg[i];
    }
    Field3 div(d);
    divergence(u, h, div);
    zero_where_not(div, cell_active);
    return linf_norm(div);
}

}  // namespace detail

inline CorrectorField build_corrector(const PerforationSpec& spec, const GridSpec& grid,
                                      const ExteriorSolution& ext, double tol = 1e-9) {
    spec.validate();
    const int per_cell = spec.cells_per_axis();
    if (grid.n % per_cell != 0)
        throw ValidationError("build_corrector: grid does not tile the lattice");
    const int m = grid.n / per_cell;
    const double eps = spec.epsilon;
    const double scale = std::pow(eps, spec.alpha);

    if (m < 8)
        throw ResolvabilityError("build_corrector: need >= 8 cells per lattice cell", 8 * per_cell);

    CorrectorField cf;
    cf.epsilon = eps;
    cf.alpha = spec.alpha;
    cf.m = m;
    cf.h = eps / m;
    GridDims d{m, m, m};
    cf.region = ByteField3(d, CorrectorField::kId);

    // the exterior solution must cover the annulus inner trace |y| = eps/4
    const double needed_R = 0.25 * std::pow(eps, 1.0 - spec.alpha) / std::max(ext.r_ref, 1e-300);
    if (!spec.hole.empty() && needed_R + 3.0 * ext.h > ext.R)
        throw ValidationError("build_corrector: exterior truncation too small; need R >= " +
                              std::to_string(needed_R + 3.0 * ext.h) + " hole radii");

    const double hole_r = spec.hole_radius();
    if (!spec.hole.empty() && 2.0 * hole_r < 4.0 * cf.h * (1.0 - 1e-12)) {
        int req = static_cast<int>(std::ceil(2.0 / hole_r)) ;
        req = ((req + per_cell - 1) / per_cell) * per_cell;
        throw ResolvabilityError("build_corrector: hole under-resolved on the cell grid", req);
    }

    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                const Vec3 y = cf.cell_center(i, j, k);
                const double r = y.norm();
                if (!spec.hole.empty() && spec.hole.contains(y * (1.0 / scale)))
                    cf.region(i, j, k) = CorrectorField::kHole;
                else if (r <= 0.25 * eps)
                    cf.region(i, j, k) = CorrectorField::kRescaled;
                else if (r <= 0.5 * eps)
                    cf.region(i, j, k) = CorrectorField::kAnnulus;
            }

    auto region_of = [&](int i, int j, int k) {
        return cf.region(wrap(i, m), wrap(j, m), wrap(k, m));
    };

    // face sets for the rescaled-region repair and the annulus solve
    ByteField3 rescaled_cells(d, 0), annulus_cells(d, 0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                if (cf.region(i, j, k) == CorrectorField::kRescaled) rescaled_cells(i, j, k) = 1;
                if (cf.region(i, j, k) == CorrectorField::kAnnulus) annulus_cells(i, j, k) = 1;
            }
    ByteField3 rescaled_faces[3], annulus_free[3];
    for (int c = 0; c < 3; ++c) {
        rescaled_faces[c] = ByteField3(d, 0);
        annulus_free[c] = ByteField3(d, 0);
    }
    DomainMask annulus_mask;
    annulus_mask.dims = d;
    annulus_mask.h = cf.h;
    annulus_mask.solid = ByteField3(d, 0);
    long long frozen = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                if (!annulus_cells(i, j, k)) {
                    annulus_mask.solid(i, j, k) = 1;
                    ++frozen;
                }
                for (int c = 0; c < 3; ++c) {
                    const int pi = i - (c == 0), pj = j - (c == 1), pk = k - (c == 2);
                    const bool r1 = rescaled_cells(i, j, k), r2 = rescaled_cells.at(pi, pj, pk);
                    if (r1 && r2) rescaled_faces[c](i, j, k) = 1;
                    const bool a1 = annulus_cells(i, j, k), a2 = annulus_cells.at(pi, pj, pk);
                    if (a1 && a2) annulus_free[c](i, j, k) = 1;
                }
            }
    annulus_mask.solid_cells = frozen;
    annulus_mask.porosity = 1.0 - static_cast<double>(frozen) / d.size();
    for (int c = 0; c < 3; ++c) {
        annulus_mask.face_solid[c] = ByteField3(d, 0);
        for (std::size_t i = 0; i < annulus_mask.face_solid[c].size(); ++i)
            annulus_mask.face_solid[c].raw()[i] = annulus_free[c].raw()[i] ? 0 : 1;
    }

    SaddleParams prm;
    prm.visc_coeff = 1.0;
    prm.gamma = 2.0;
    prm.mu_hint = 2.0 * std::pow(2.0 * M_PI / eps, 2.0);
    prm.tol = tol;
    prm.max_iter = 6000;
    SaddleSolver annulus_solver(annulus_mask, prm);
    annulus_solver.set_constant_viscosity(2.0);

    for (int dir = 0; dir < 3; ++dir) {
        cf.W[dir] = MacField(d);
        cf.Q[dir] = Field3(d, 0.0);
        // identity init
        cf.W[dir].comp[dir].fill(1.0);

        // rescaled region (and its traces into the annulus): sample the
        // exterior solution; hole faces come out exactly zero afterwards
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < m; ++k) {
                        const auto r1 = region_of(i, j, k);
                        const auto r2 = c == 0 ? region_of(i - 1, j, k)
                                               : (c == 1 ? region_of(i, j - 1, k)
                                                         : region_of(i, j, k - 1));
                        const bool inner1 =
                            r1 == CorrectorField::kRescaled || r1 == CorrectorField::kHole;
                        const bool inner2 =
                            r2 == CorrectorField::kRescaled || r2 == CorrectorField::kHole;
                        if (!inner1 && !inner2) continue;
                        const Vec3 y = cf.face_pos(c, i, j, k);
                        cf.W[dir].comp[c](i, j, k) =
                            ext.v_at(dir, y * (1.0 / scale))[c];
                    }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    if (cf.region(i, j, k) == CorrectorField::kRescaled)
                        cf.Q[dir](i, j, k) = ext.q_at(dir, cf.cell_center(i, j, k) * (1.0 / scale)) /
                                             scale;

        // zero on the hole (all faces of hole cells)
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < m; ++k) {
                        const bool s1 = region_of(i, j, k) == CorrectorField::kHole;
                        const bool s2 = (c == 0 ? region_of(i - 1, j, k)
                                                : (c == 1 ? region_of(i, j - 1, k)
                                                          : region_of(i, j, k - 1))) ==
                                        CorrectorField::kHole;
                        if (s1 || s2) cf.W[dir].comp[c](i, j, k) = 0.0;
                    }

        // trilinear sampling is not discretely solenoidal; project it back
        const double defect =
            detail::repair_divergence(cf.W[dir], rescaled_cells, rescaled_faces, cf.h, tol);
        cf.div_tolerance = std::max(cf.div_tolerance, defect);

        // annulus Stokes solve against the assembled traces; its pressure
        // lives on annulus cells only and is merged into Q afterwards
        MacField rhs(d);
        Field3 g(d, 0.0);
        Field3 p_annulus(d);
        auto stats = annulus_solver.solve(rhs, g, cf.W[dir], p_annulus);
        if (!stats.converged)
            throw SolverError("build_corrector: annulus solve did not converge", stats.history);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    if (cf.region(i, j, k) == CorrectorField::kAnnulus)
                        cf.Q[dir](i, j, k) = p_annulus(i, j, k);
        Field3 div(d);
        divergence(cf.W[dir], cf.h, div);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    if (cf.region(i, j, k) == CorrectorField::kHole) div(i, j, k) = 0.0;
        cf.div_tolerance = std::max(cf.div_tolerance, linf_norm(div));

        double mean = 0.0;
        for (double v : cf.Q[dir].raw()) mean += v;
        mean /= cf.Q[dir].size();
        for (double& v : cf.Q[dir].raw()) v -= mean;

        for (int c = 0; c < 3; ++c)
            for (double v : cf.W[dir].comp[c].raw())
                cf.max_overshoot = std::max(cf.max_overshoot, std::abs(v) - 1.0);
    }
    return cf;
}

struct CorrectorNorms {
    double w_minus_id = 0.0;
    double grad_w = 0.0;
    double q_norm = 0.0;
    std::string note;
};

// Torus L^q norms from the single-cell field: the cell tiles the torus, so the
// norm is the volumetric mean over the stored block (any number of tiles).
inline CorrectorNorms corrector_norms(const CorrectorField& cf, double q) {
    if (!(q >= 1.0)) throw ValidationError("corrector_norms: q must be >= 1");
    CorrectorNorms out;
    const GridDims d = cf.W[0].dims();
    const double cells = static_cast<double>(d.size());
    const bool inf = std::isinf(q);

    double wid = 0.0, qn = 0.0;
    for (int dir = 0; dir < 3; ++dir) {
        for (int c = 0; c < 3; ++c) {
            const double id_val = (c == dir) ? 1.0 : 0.0;
            for (double v : cf.W[dir].comp[c].raw()) {
                const double dev = std::abs(v - id_val);
                if (inf)
                    wid = std::max(wid, dev);
                else
                    wid += std::pow(dev, q);
            }
        }
        for (double v : cf.Q[dir].raw()) {
            const double av = std::abs(v);
            if (inf)
                qn = std::max(qn, av);
            else
                qn += std::pow(av, q);
        }
    }

    double gw = 0.0;
    if (inf) {
        for (int dir = 0; dir < 3; ++dir) {
            const GridDims dd = cf.W[dir].dims();
            for (int i = 0; i < dd.nx; ++i)
                for (int j = 0; j < dd.ny; ++j)
                    for (int k = 0; k < dd.nz; ++k)
                        for (int c = 0; c < 3; ++c) {
                            const auto& f = cf.W[dir].comp[c];
                            gw = std::max({gw, std::abs(f.at(i + 1, j, k) - f(i, j, k)) / cf.h,
                                           std::abs(f.at(i, j + 1, k) - f(i, j, k)) / cf.h,
                                           std::abs(f.at(i, j, k + 1) - f(i, j, k)) / cf.h});
                        }
        }
        out.w_minus_id = wid;
        out.grad_w = gw;
        out.q_norm = qn;
    } else {
        for (int dir = 0; dir < 3; ++dir) gw += gradient_lq_pow(cf.W[dir], cf.h, q);
        // volumetric mean over the block: multiply by h^3 / (eps-cell count
        // adjusted); the stored block covers (cells * h^3) of volume
        const double volume = cells * cf.h * cf.h * cf.h;
        out.w_minus_id = std::pow(wid * cf.h * cf.h * cf.h / volume, 1.0 / q);
        out.grad_w = std::pow(gw / volume, 1.0 / q);
        out.q_norm = std::pow(qn * cf.h * cf.h * cf.h / volume, 1.0 / q);
    }
    if (q == 3.0)
        out.note = "q=3 carries a |log eps|^{1/3} factor; excluded from slope checks";
    return out;
}

// Explicitly tiled block (reps^3 copies), for the periodicity property check.
inline CorrectorField tile_corrector(const CorrectorField& cf, int reps) {
    CorrectorField out;
    out.epsilon = cf.epsilon;
    out.alpha = cf.alpha;
    out.m = cf.m * reps;
    out.h = cf.h;
    out.div_tolerance = cf.div_tolerance;
    out.max_overshoot = cf.max_overshoot;
    GridDims d{out.m, out.m, out.m};
    out.region = ByteField3(d, 0);
    for (int dir = 0; dir < 3; ++dir) {
        out.W[dir] = MacField(d);
        out.Q[dir] = Field3(d);
        for (int i = 0; i < out.m; ++i)
            for (int j = 0; j < out.m; ++j)
                for (int k = 0; k < out.m; ++k) {
                    for (int c = 0; c < 3; ++c)
                        out.W[dir].comp[c](i, j, k) =
                            cf.W[dir].comp[c](i % cf.m, j % cf.m, k % cf.m);
                    out.Q[dir](i, j, k) = cf.Q[dir](i % cf.m, j % cf.m, k % cf.m);
                    out.region(i, j, k) = cf.region(i % cf.m, j % cf.m, k % cf.m);
                }
    }
    return out;
}

struct PairingReport {
    double pairing = 0.0;
    double target = 0.0;
    double defect = 0.0;
};

// Weak-convergence surrogate: the discrete pairing
//   eps^{3-a} < -Delta W + grad Q, phi (x) gamma >,  gamma = W e_j,
// streamed over the torus cells of the tiling, against its limit
// (M0 phi_mean) . e_j. The residual field r^l = -div(2 D w^l) + grad q^l is
// cell-periodic and supported near the hole.
inline PairingReport corrector_pairing(const CorrectorField& cf, const Mat3& M0,
                                       const BandLimitedField& phi, int j_dir) {
    const GridDims d = cf.W[0].dims();
    const int m = cf.m;
    const int per_axis = static_cast<int>(std::llround(1.0 / cf.epsilon));
    const double h = cf.h;

    // residual per column on the cell
    MacField r[3];
    ViscosityField two;
    constant_viscosity(d, 2.0, two);
    StrainField work(d);
    for (int l = 0; l < 3; ++l) {
        r[l] = MacField(d);
        r[l].fill(0.0);
        viscous_apply(cf.W[l], two, h, 1.0, work, r[l]);
        gradient_add(cf.Q[l], h, 1.0, r[l]);
    }

    const double scale = std::pow(cf.epsilon, 3.0 - cf.alpha);
    double total = 0.0;
    for (int ci = 0; ci < per_axis; ++ci)
        for (int cj = 0; cj < per_axis; ++cj)
            for (int ck = 0; ck < per_axis; ++ck) {
                const Vec3 origin{ci * cf.epsilon, cj * cf.epsilon, ck * cf.epsilon};
                double cell_sum = 0.0;
                for (int c = 0; c < 3; ++c)
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < m; ++j)
                            for (int k = 0; k < m; ++k) {
                                const double gamma_c = cf.W[j_dir].comp[c](i, j, k);
                                if (gamma_c == 0.0) continue;
                                double rsum = 0.0;
                                bool any = false;
                                for (int l = 0; l < 3; ++l) {
                                    const double rv = r[l].comp[c](i, j, k);
                                    if (rv != 0.0) any = true;
                                }
                                if (!any) continue;
                                Vec3 pos = cf.face_pos(c, i, j, k);
                                pos = pos + origin +
                                      Vec3{0.5 * cf.epsilon, 0.5 * cf.epsilon, 0.5 * cf.epsilon};
                                const Vec3 phiv = phi.eval(pos);
                                for (int l = 0; l < 3; ++l)
                                    rsum += r[l].comp[c](i, j, k) * phiv[l];
                                cell_sum += rsum * gamma_c;
                            }
                total += cell_sum;
            }
    PairingReport rep;
    rep.pairing = scale * total * h * h * h;
    rep.target = (M0 * phi.constant)[j_dir];
    rep.defect = std::abs(rep.pairing - rep.target);
    return rep;
}

}  // namespace porelab
