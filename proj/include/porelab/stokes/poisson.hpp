#pragma once

#include <complex>
#include <vector>

#include "porelab/core/error.hpp"
#include "porelab/fft/fft3.hpp"
#include "porelab/stokes/mac_ops.hpp"

namespace porelab {

struct CgStats {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

namespace detail {

inline void remove_mean_where(Field3& f, const ByteField3& active) {
    const double* pf = f.data();
    const std::uint8_t* pa = active.data();
    double s = 0;
    long long cnt = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (pa[i]) {
            s += pf[i];
            ++cnt;
        }
    if (!cnt) return;
    const double mean = s / cnt;
    double* pw = f.data();
    for (std::size_t i = 0; i < f.size(); ++i)
        if (pa[i]) pw[i] -= mean;
}

inline void zero_where_not(Field3& f, const ByteField3& active) {
    double* pf = f.data();
    const std::uint8_t* pa = active.data();
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!pa[i]) pf[i] = 0.0;
}

}  // namespace detail

// Preconditioned CG on a masked cell-centered elliptic operator. Two flavors:
//  - Dirichlet: -Lap with value 0 pinned on inactive cells (hole eigenprobe).
//  - FaceNeumann: q -> -div(chi_faces grad q), the pressure-projection operator
//    with masked faces; singular on constants, gauged to zero active mean.
class CellPoisson {
  public:
    enum class Kind { Dirichlet, FaceNeumann };

    CellPoisson(GridDims d, double h, Kind kind, const ByteField3& cell_active,
                const ByteField3* face_free, double precond_shift = 0.0)
        : d_(d),
          h_(h),
          kind_(kind),
          cell_active_(&cell_active),
          face_free_(face_free),
          shift_(precond_shift),
          fft_(d),
          sym_(d, h) {
        spec_.resize(fft_.spectral_size());
        for (auto& f : work_) f = Field3(d);
        if (kind_ == Kind::FaceNeumann && !face_free)
            throw ValidationError("CellPoisson: FaceNeumann needs face masks");
    }

    void apply(const Field3& q, Field3& out) const {
        const int nx = d_.nx, ny = d_.ny, nz = d_.nz;
        const double ih2 = 1.0 / (h_ * h_);
        if (kind_ == Kind::Dirichlet) {
            parallel_for_slabs(nx, [&](int ib, int ie) {
                for (int i = ib; i < ie; ++i)
                    for (int j = 0; j < ny; ++j)
                        for (int k = 0; k < nz; ++k) {
                            if (!(*cell_active_)(i, j, k)) {
                                out(i, j, k) = 0.0;
                                continue;
                            }
                            auto val = [&](int ii, int jj, int kk) {
                                return (*cell_active_).at(ii, jj, kk) ? q.at(ii, jj, kk) : 0.0;
                            };
                            out(i, j, k) = ih2 * (6.0 * q(i, j, k) - val(i - 1, j, k) - val(i + 1, j, k) -
                                                  val(i, j - 1, k) - val(i, j + 1, k) -
                                                  val(i, j, k - 1) - val(i, j, k + 1));
                        }
            });
        } else {
            parallel_for_slabs(nx, [&](int ib, int ie) {
                for (int i = ib; i < ie; ++i)
                    for (int j = 0; j < ny; ++j)
                        for (int k = 0; k < nz; ++k) {
                            if (!(*cell_active_)(i, j, k)) {
                                out(i, j, k) = 0.0;
                                continue;
                            }
                            double acc = 0.0;
                            // flux through each free face, q clamped on inactive cells
                            auto flux = [&](int c, int fi, int fj, int fk, int ci, int cj, int ck) {
                                if (!face_free_[c].at(fi, fj, fk)) return 0.0;
                                return q.at(ci, cj, ck) - q(i, j, k);
                            };
                            acc += flux(0, i + 1, j, k, i + 1, j, k);
                            acc += flux(0, i, j, k, i - 1, j, k);
                            acc += flux(1, i, j + 1, k, i, j + 1, k);
                            acc += flux(1, i, j, k, i, j - 1, k);
                            acc += flux(2, i, j, k + 1, i, j, k + 1);
                            acc += flux(2, i, j, k, i, j, k - 1);
                            out(i, j, k) = -acc * ih2;
                        }
            });
        }
    }

    CgStats solve(const Field3& rhs, Field3& q, double tol, int max_iter) {
        Field3& r = work_[0];
        Field3& z = work_[1];
        Field3& pdir = work_[2];
        Field3& ap = work_[3];

        q.fill(0.0);
        r = rhs;
        project(r);
        precondition(r, z);
        double rz = dot(r, z);
        const double rz0 = rz;
        CgStats st;
        if (rz0 <= 0.0) {
            st.converged = true;
            return st;
        }
        pdir = z;
        while (st.iterations < max_iter) {
            ++st.iterations;
            apply(pdir, ap);
            project(ap);
            const double pap = dot(pdir, ap);
            if (pap <= 0.0) break;
            const double alpha = rz / pap;
            axpy(alpha, pdir, q);
            axpy(-alpha, ap, r);
            precondition(r, z);
            const double rz_new = dot(r, z);
            st.rel_residual = std::sqrt(std::max(0.0, rz_new / rz0));
            if (st.rel_residual <= tol) {
                st.converged = true;
                break;
            }
            const double beta = rz_new / rz;
            scale(pdir, beta);
            axpy(1.0, z, pdir);
            rz = rz_new;
        }
        project(q);
        return st;
    }

  private:
    void project(Field3& f) const {
        detail::zero_where_not(f, *cell_active_);
        if (kind_ == Kind::FaceNeumann) detail::remove_mean_where(f, *cell_active_);
    }

    void precondition(const Field3& r, Field3& z) {
        fft_.forward(r, spec_);
        const int nx = d_.nx, ny = d_.ny, nzc = fft_.nzc();
        parallel_for_slabs(nx, [&](int ib, int ie) {
            for (int i = ib; i < ie; ++i)
                for (int j = 0; j < ny; ++j)
                    for (int k = 0; k < nzc; ++k) {
                        const std::size_t idx = (static_cast<std::size_t>(i) * ny + j) * nzc + k;
                        const double w2 = sym_.g2[0][i] + sym_.g2[1][j] + sym_.g2[2][k] + shift_;
                        spec_[idx] = w2 > 0.0 ? spec_[idx] / w2 : 0.0;
                    }
        });
        fft_.inverse(spec_, z);
        project(z);
    }

    GridDims d_;
    double h_;
    Kind kind_;
    const ByteField3* cell_active_;
    const ByteField3* face_free_;
    double shift_;
    Fft3 fft_;
    DiffSymbols sym_;
    std::vector<std::complex<double>> spec_;
    Field3 work_[4];
};

// L^2 projection of u onto {div v = 0 on fluid cells, v = 0 on fixed faces}.
inline CgStats leray_project(MacField& u, const DomainMask& mask, double tol = 1e-10,
                             int max_iter = 2000) {
    zero_fixed_faces(u, mask);
    ByteField3 fluid(mask.dims, 0);
    for (std::size_t i = 0; i < fluid.size(); ++i) fluid.raw()[i] = mask.solid.raw()[i] ? 0 : 1;
    ByteField3 free_faces[3];
    for (int c = 0; c < 3; ++c) {
        free_faces[c] = ByteField3(mask.dims, 0);
        for (std::size_t i = 0; i < free_faces[c].size(); ++i)
            free_faces[c].raw()[i] = mask.face_solid[c].raw()[i] ? 0 : 1;
    }
    CellPoisson poisson(mask.dims, mask.h, CellPoisson::Kind::FaceNeumann, fluid, free_faces);
    Field3 div_u(mask.dims), q(mask.dims);
    divergence(u, mask.h, div_u);
    scale(div_u, -1.0);  // the operator is -div(chi grad .)
    detail::zero_where_not(div_u, fluid);
    detail::remove_mean_where(div_u, fluid);
    const CgStats st = poisson.solve(div_u, q, tol, max_iter);
    MacField gq(mask.dims);
    gradient(q, mask.h, gq);
    zero_fixed_faces(gq, mask);
    axpy(-1.0, gq, u);
    return st;
}

}  // namespace porelab
