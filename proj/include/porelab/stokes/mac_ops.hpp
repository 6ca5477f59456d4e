#pragma once

#include <cmath>

#include "porelab/constitutive.hpp"
#include "porelab/core/array3.hpp"
#include "porelab/core/parallel.hpp"
#include "porelab/geometry.hpp"

namespace porelab {

// Rate-of-strain components on their native staggered positions:
//   diag[c]  = D_cc at cell centers
//   off[0]   = D_yz at x-edges, off[1] = D_xz at y-edges, off[2] = D_xy at z-edges
struct StrainField {
    Field3 diag[3];
    Field3 off[3];

    StrainField() = default;
    explicit StrainField(GridDims d) {
        for (int c = 0; c < 3; ++c) {
            diag[c] = Field3(d);
            off[c] = Field3(d);
        }
    }
};

inline void divergence(const MacField& u, double h, Field3& out) {
    const GridDims d = u.dims();
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k)
                    out(i, j, k) = (u.comp[0].at(i + 1, j, k) - u.comp[0](i, j, k) +
                                    u.comp[1].at(i, j + 1, k) - u.comp[1](i, j, k) +
                                    u.comp[2].at(i, j, k + 1) - u.comp[2](i, j, k)) /
                                   h;
    });
}

// out_c = (p(i) - p(i-1))/h on c-normal faces; adjoint of -divergence.
inline void gradient(const Field3& p, double h, MacField& out) {
    const GridDims d = p.dims();
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    out.comp[0](i, j, k) = (p(i, j, k) - p.at(i - 1, j, k)) / h;
                    out.comp[1](i, j, k) = (p(i, j, k) - p.at(i, j - 1, k)) / h;
                    out.comp[2](i, j, k) = (p(i, j, k) - p.at(i, j, k - 1)) / h;
                }
    });
}

// out_c += coeff*(p(i) - p(i-1))/h
inline void gradient_add(const Field3& p, double h, double coeff, MacField& out) {
    const GridDims d = p.dims();
    const double s = coeff / h;
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    out.comp[0](i, j, k) += s * (p(i, j, k) - p.at(i - 1, j, k));
                    out.comp[1](i, j, k) += s * (p(i, j, k) - p.at(i, j - 1, k));
                    out.comp[2](i, j, k) += s * (p(i, j, k) - p.at(i, j, k - 1));
                }
    });
}

inline void strain(const MacField& u, double h, StrainField& D) {
    const GridDims d = u.dims();
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    D.diag[0](i, j, k) = (u.comp[0].at(i + 1, j, k) - u.comp[0](i, j, k)) / h;
                    D.diag[1](i, j, k) = (u.comp[1].at(i, j + 1, k) - u.comp[1](i, j, k)) / h;
                    D.diag[2](i, j, k) = (u.comp[2].at(i, j, k + 1) - u.comp[2](i, j, k)) / h;
                    // D_yz at x-edge (i,j,k)
                    D.off[0](i, j, k) = 0.5 * ((u.comp[1](i, j, k) - u.comp[1].at(i, j, k - 1)) +
                                               (u.comp[2](i, j, k) - u.comp[2].at(i, j - 1, k))) /
                                        h;
                    // D_xz at y-edge
                    D.off[1](i, j, k) = 0.5 * ((u.comp[0](i, j, k) - u.comp[0].at(i, j, k - 1)) +
                                               (u.comp[2](i, j, k) - u.comp[2].at(i - 1, j, k))) /
                                        h;
                    // D_xy at z-edge
                    D.off[2](i, j, k) = 0.5 * ((u.comp[0](i, j, k) - u.comp[0].at(i, j - 1, k)) +
                                               (u.comp[1](i, j, k) - u.comp[1].at(i - 1, j, k))) /
                                        h;
                }
    });
}

// Viscosity evaluated at cells and edges from the cell-sampled |Du|. Edge
// values average the four adjacent cell magnitudes.
struct ViscosityField {
    Field3 cell;
    Field3 edge[3];  // same edge families as StrainField::off
};

inline void strain_magnitude_cells(const StrainField& D, Field3& mag2) {
    const GridDims d = D.diag[0].dims();
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    double s = 0;
                    for (int c = 0; c < 3; ++c) {
                        const double v = D.diag[c](i, j, k);
                        s += v * v;
                    }
                    // four x-edges of the cell carry D_yz, etc.
                    auto e2 = [&](const Field3& f, int di, int dj, int dk) {
                        const double v = f.at(i + di, j + dj, k + dk);
                        return v * v;
                    };
                    s += 0.5 * (e2(D.off[0], 0, 0, 0) + e2(D.off[0], 0, 1, 0) + e2(D.off[0], 0, 0, 1) +
                                e2(D.off[0], 0, 1, 1));
                    s += 0.5 * (e2(D.off[1], 0, 0, 0) + e2(D.off[1], 1, 0, 0) + e2(D.off[1], 0, 0, 1) +
                                e2(D.off[1], 1, 0, 1));
                    s += 0.5 * (e2(D.off[2], 0, 0, 0) + e2(D.off[2], 1, 0, 0) + e2(D.off[2], 0, 1, 0) +
                                e2(D.off[2], 1, 1, 0));
                    mag2(i, j, k) = s;
                }
    });
}

inline void viscosity_from_strain(const StrainField& D, const ViscosityLaw& law, double beta,
                                  ViscosityField& eta, Field3& work_mag2) {
    const GridDims d = D.diag[0].dims();
    strain_magnitude_cells(D, work_mag2);
    if (eta.cell.dims() != d) {
        eta.cell = Field3(d);
        for (auto& e : eta.edge) e = Field3(d);
    }
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k)
                    eta.cell(i, j, k) = law.eta(beta * std::sqrt(work_mag2(i, j, k)));
    });
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    auto m = [&](int di, int dj, int dk) { return work_mag2.at(i + di, j + dj, k + dk); };
                    const double myz = 0.25 * (m(0, 0, 0) + m(0, -1, 0) + m(0, 0, -1) + m(0, -1, -1));
                    const double mxz = 0.25 * (m(0, 0, 0) + m(-1, 0, 0) + m(0, 0, -1) + m(-1, 0, -1));
                    const double mxy = 0.25 * (m(0, 0, 0) + m(-1, 0, 0) + m(0, -1, 0) + m(-1, -1, 0));
                    eta.edge[0](i, j, k) = law.eta(beta * std::sqrt(myz));
                    eta.edge[1](i, j, k) = law.eta(beta * std::sqrt(mxz));
                    eta.edge[2](i, j, k) = law.eta(beta * std::sqrt(mxy));
                }
    });
}

inline void constant_viscosity(GridDims d, double value, ViscosityField& eta) {
    eta.cell = Field3(d, value);
    for (auto& e : eta.edge) e = Field3(d, value);
}

// out += coeff * [S^T H S u] with H the (cell, edge) viscosity fields; the
// discrete -div(eta D u). D is scratch.
inline void viscous_apply(const MacField& u, const ViscosityField& eta, double h, double coeff,
                          StrainField& D, MacField& out) {
    const GridDims d = u.dims();
    strain(u, h, D);
    // fold viscosity into the fluxes in place
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    const double ec = eta.cell(i, j, k);
                    for (int c = 0; c < 3; ++c) D.diag[c](i, j, k) *= ec;
                    for (int c = 0; c < 3; ++c) D.off[c](i, j, k) *= eta.edge[c](i, j, k);
                }
    });
    const double s = coeff / h;
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    out.comp[0](i, j, k) -= s * (D.diag[0](i, j, k) - D.diag[0].at(i - 1, j, k) +
                                                 D.off[2].at(i, j + 1, k) - D.off[2](i, j, k) +
                                                 D.off[1].at(i, j, k + 1) - D.off[1](i, j, k));
                    out.comp[1](i, j, k) -= s * (D.diag[1](i, j, k) - D.diag[1].at(i, j - 1, k) +
                                                 D.off[2].at(i + 1, j, k) - D.off[2](i, j, k) +
                                                 D.off[0].at(i, j, k + 1) - D.off[0](i, j, k));
                    out.comp[2](i, j, k) -= s * (D.diag[2](i, j, k) - D.diag[2].at(i, j, k - 1) +
                                                 D.off[1].at(i + 1, j, k) - D.off[1](i, j, k) +
                                                 D.off[0].at(i, j + 1, k) - D.off[0](i, j, k));
                }
    });
}

// out += coeff * (D^T D) u = -coeff * grad(div u); the augmented-Lagrangian
// block. div_work is scratch.
inline void grad_div_apply(const MacField& u, double h, double coeff, Field3& div_work, MacField& out) {
    const GridDims d = u.dims();
    divergence(u, h, div_work);
    const double s = coeff / h;
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    out.comp[0](i, j, k) -= s * (div_work(i, j, k) - div_work.at(i - 1, j, k));
                    out.comp[1](i, j, k) -= s * (div_work(i, j, k) - div_work.at(i, j - 1, k));
                    out.comp[2](i, j, k) -= s * (div_work(i, j, k) - div_work.at(i, j, k - 1));
                }
    });
}

// Conservative advection fluxes: out = div(u (x) v) evaluated at faces, with
// face-averaged transport velocities (u = v gives the standard nonlinear term).
inline void advect(const MacField& u, const MacField& v, double h, MacField& out) {
    const GridDims d = u.dims();
    auto avg = [](double a, double b) { return 0.5 * (a + b); };
    parallel_for_slabs(d.nx, [&](int ib, int ie) {
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    // x-momentum
                    {
                        const double fxx_p = avg(u.comp[0](i, j, k), u.comp[0].at(i + 1, j, k)) *
                                             avg(v.comp[0](i, j, k), v.comp[0].at(i + 1, j, k));
                        const double fxx_m = avg(u.comp[0].at(i - 1, j, k), u.comp[0](i, j, k)) *
                                             avg(v.comp[0].at(i - 1, j, k), v.comp[0](i, j, k));
                        const double fxy_p = avg(u.comp[1].at(i, j + 1, k), u.comp[1].at(i - 1, j + 1, k)) *
                                             avg(v.comp[0](i, j, k), v.comp[0].at(i, j + 1, k));
                        const double fxy_m = avg(u.comp[1](i, j, k), u.comp[1].at(i - 1, j, k)) *
                                             avg(v.comp[0].at(i, j - 1, k), v.comp[0](i, j, k));
                        const double fxz_p = avg(u.comp[2].at(i, j, k + 1), u.comp[2].at(i - 1, j, k + 1)) *
                                             avg(v.comp[0](i, j, k), v.comp[0].at(i, j, k + 1));
                        const double fxz_m = avg(u.comp[2](i, j, k), u.comp[2].at(i - 1, j, k)) *
                                             avg(v.comp[0].at(i, j, k - 1), v.comp[0](i, j, k));
                        out.comp[0](i, j, k) = (fxx_p - fxx_m + fxy_p - fxy_m + fxz_p - fxz_m) / h;
                    }
                    // y-momentum
                    {
                        const double fyy_p = avg(u.comp[1](i, j, k), u.comp[1].at(i, j + 1, k)) *
                                             avg(v.comp[1](i, j, k), v.comp[1].at(i, j + 1, k));
                        const double fyy_m = avg(u.comp[1].at(i, j - 1, k), u.comp[1](i, j, k)) *
                                             avg(v.comp[1].at(i, j - 1, k), v.comp[1](i, j, k));
                        const double fyx_p = avg(u.comp[0].at(i + 1, j, k), u.comp[0].at(i + 1, j - 1, k)) *
                                             avg(v.comp[1](i, j, k), v.comp[1].at(i + 1, j, k));
                        const double fyx_m = avg(u.comp[0](i, j, k), u.comp[0].at(i, j - 1, k)) *
                                             avg(v.comp[1].at(i - 1, j, k), v.comp[1](i, j, k));
                        const double fyz_p = avg(u.comp[2].at(i, j, k + 1), u.comp[2].at(i, j - 1, k + 1)) *
                                             avg(v.comp[1](i, j, k), v.comp[1].at(i, j, k + 1));
                        const double fyz_m = avg(u.comp[2](i, j, k), u.comp[2].at(i, j - 1, k)) *
                                             avg(v.comp[1].at(i, j, k - 1), v.comp[1](i, j, k));
                        out.comp[1](i, j, k) = (fyy_p - fyy_m + fyx_p - fyx_m + fyz_p - fyz_m) / h;
                    }
                    // z-momentum
                    {
                        const double fzz_p = avg(u.comp[2](i, j, k), u.comp[2].at(i, j, k + 1)) *
                                             avg(v.comp[2](i, j, k), v.comp[2].at(i, j, k + 1));
                        const double fzz_m = avg(u.comp[2].at(i, j, k - 1), u.comp[2](i, j, k)) *
                                             avg(v.comp[2].at(i, j, k - 1), v.comp[2](i, j, k));
                        const double fzx_p = avg(u.comp[0].at(i + 1, j, k), u.comp[0].at(i + 1, j, k - 1)) *
                                             avg(v.comp[2](i, j, k), v.comp[2].at(i + 1, j, k));
                        const double fzx_m = avg(u.comp[0](i, j, k), u.comp[0].at(i, j, k - 1)) *
                                             avg(v.comp[2].at(i - 1, j, k), v.comp[2](i, j, k));
                        const double fzy_p = avg(u.comp[1].at(i, j + 1, k), u.comp[1].at(i, j + 1, k - 1)) *
                                             avg(v.comp[2](i, j, k), v.comp[2].at(i, j + 1, k));
                        const double fzy_m = avg(u.comp[1](i, j, k), u.comp[1].at(i, j, k - 1)) *
                                             avg(v.comp[2].at(i, j - 1, k), v.comp[2](i, j, k));
                        out.comp[2](i, j, k) = (fzz_p - fzz_m + fzx_p - fzx_m + fzy_p - fzy_m) / h;
                    }
                }
    });
}

// ---- reductions ----

inline double dot(const Field3& a, const Field3& b) {
    const double* pa = a.data();
    const double* pb = b.data();
    const long long n = static_cast<long long>(a.size());
    const int slabs = a.nx();
    const long long per = n / slabs;
    return parallel_sum_slabs(slabs, [&](int sb, int se) {
        double s = 0;
        for (long long i = sb * per; i < se * per; ++i) s += pa[i] * pb[i];
        return s;
    });
}

inline double dot(const MacField& a, const MacField& b) {
    return dot(a.comp[0], b.comp[0]) + dot(a.comp[1], b.comp[1]) + dot(a.comp[2], b.comp[2]);
}

inline void axpy(double alpha, const Field3& x, Field3& y) {
    const double* px = x.data();
    double* py = y.data();
    const long long n = static_cast<long long>(x.size());
    parallel_for_slabs(x.nx(), [&](int b, int e) {
        const long long per = n / x.nx();
        for (long long i = b * per; i < e * per; ++i) py[i] += alpha * px[i];
    });
}

inline void axpy(double alpha, const MacField& x, MacField& y) {
    for (int c = 0; c < 3; ++c) axpy(alpha, x.comp[c], y.comp[c]);
}

inline void scale(Field3& x, double alpha) {
    double* px = x.data();
    const long long n = static_cast<long long>(x.size());
    parallel_for_slabs(x.nx(), [&](int b, int e) {
        const long long per = n / x.nx();
        for (long long i = b * per; i < e * per; ++i) px[i] *= alpha;
    });
}

inline void scale(MacField& x, double alpha) {
    for (int c = 0; c < 3; ++c) scale(x.comp[c], alpha);
}

// ---- masking ----

inline void zero_fixed_faces(MacField& u, const DomainMask& mask) {
    for (int c = 0; c < 3; ++c) {
        double* pu = u.comp[c].data();
        const std::uint8_t* pm = mask.face_solid[c].data();
        const long long n = static_cast<long long>(u.comp[c].size());
        parallel_for_slabs(u.comp[c].nx(), [&](int b, int e) {
            const long long per = n / u.comp[c].nx();
            for (long long i = b * per; i < e * per; ++i)
                if (pm[i]) pu[i] = 0.0;
        });
    }
}

inline void zero_solid_cells(Field3& p, const DomainMask& mask) {
    double* pp = p.data();
    const std::uint8_t* pm = mask.solid.data();
    const long long n = static_cast<long long>(p.size());
    parallel_for_slabs(p.nx(), [&](int b, int e) {
        const long long per = n / p.nx();
        for (long long i = b * per; i < e * per; ++i)
            if (pm[i]) pp[i] = 0.0;
    });
}

// Subtracts the fluid-cell mean (the zero-mean pressure gauge).
inline void remove_fluid_mean(Field3& p, const DomainMask& mask) {
    const double* pp = p.data();
    const std::uint8_t* pm = mask.solid.data();
    const long long n = static_cast<long long>(p.size());
    const long long per = n / p.nx();
    const double sum = parallel_sum_slabs(p.nx(), [&](int b, int e) {
        double s = 0;
        for (long long i = b * per; i < e * per; ++i)
            if (!pm[i]) s += pp[i];
        return s;
    });
    const long long fluid = static_cast<long long>(mask.dims.size()) - mask.solid_cells;
    if (fluid == 0) return;
    const double mean = sum / static_cast<double>(fluid);
    double* pw = p.data();
    parallel_for_slabs(p.nx(), [&](int b, int e) {
        for (long long i = b * per; i < e * per; ++i)
            if (!pm[i]) pw[i] -= mean;
    });
}

inline void remove_component_means(MacField& u) {
    for (int c = 0; c < 3; ++c) {
        double* p = u.comp[c].data();
        const long long n = static_cast<long long>(u.comp[c].size());
        const long long per = n / u.comp[c].nx();
        const double sum = parallel_sum_slabs(u.comp[c].nx(), [&](int b, int e) {
            double s = 0;
            for (long long i = b * per; i < e * per; ++i) s += p[i];
            return s;
        });
        const double mean = sum / static_cast<double>(n);
        parallel_for_slabs(u.comp[c].nx(), [&](int b, int e) {
            for (long long i = b * per; i < e * per; ++i) p[i] -= mean;
        });
    }
}

// ---- physical norms ----

inline double l2_norm(const Field3& a, double h) { return std::sqrt(dot(a, a) * h * h * h); }
inline double l2_norm(const MacField& a, double h) { return std::sqrt(dot(a, a) * h * h * h); }

inline double l1_norm(const Field3& a, double h) {
    const double* p = a.data();
    const long long n = static_cast<long long>(a.size());
    const long long per = n / a.nx();
    const double s = parallel_sum_slabs(a.nx(), [&](int b, int e) {
        double acc = 0;
        for (long long i = b * per; i < e * per; ++i) acc += std::abs(p[i]);
        return acc;
    });
    return s * h * h * h;
}

inline double linf_norm(const Field3& a) {
    const double* p = a.data();
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(p[i]));
    return m;
}

// ||Du||_q^q over native positions with weight 2 on the off-diagonal families.
inline double strain_lq_pow(const StrainField& D, double h, double q) {
    double s = 0;
    for (int c = 0; c < 3; ++c) {
        const double* p = D.diag[c].data();
        for (std::size_t i = 0; i < D.diag[c].size(); ++i) s += std::pow(std::abs(p[i]), q);
        const double* po = D.off[c].data();
        for (std::size_t i = 0; i < D.off[c].size(); ++i) s += 2.0 * std::pow(std::abs(po[i]), q);
    }
    return s * h * h * h;
}

// ||grad u||_q^q with the nine components on their native positions: diagonal
// parts at cells, mixed parts at the shared edges.
inline double gradient_lq_pow(const MacField& u, double h, double q) {
    const GridDims d = u.dims();
    const double s = parallel_sum_slabs(d.nx, [&](int ib, int ie) {
        double acc = 0;
        auto add = [&](double v) { acc += std::pow(std::abs(v), q); };
        for (int i = ib; i < ie; ++i)
            for (int j = 0; j < d.ny; ++j)
                for (int k = 0; k < d.nz; ++k) {
                    add((u.comp[0].at(i + 1, j, k) - u.comp[0](i, j, k)) / h);
                    add((u.comp[1].at(i, j + 1, k) - u.comp[1](i, j, k)) / h);
                    add((u.comp[2].at(i, j, k + 1) - u.comp[2](i, j, k)) / h);
                    add((u.comp[2](i, j, k) - u.comp[2].at(i, j - 1, k)) / h);  // dy u_z
                    add((u.comp[1](i, j, k) - u.comp[1].at(i, j, k - 1)) / h);  // dz u_y
                    add((u.comp[2](i, j, k) - u.comp[2].at(i - 1, j, k)) / h);  // dx u_z
                    add((u.comp[0](i, j, k) - u.comp[0].at(i, j, k - 1)) / h);  // dz u_x
                    add((u.comp[1](i, j, k) - u.comp[1].at(i - 1, j, k)) / h);  // dx u_y
                    add((u.comp[0](i, j, k) - u.comp[0].at(i, j - 1, k)) / h);  // dy u_x
                }
        return acc;
    });
    return s * h * h * h;
}

inline double gradient_lq_norm(const MacField& u, double h, double q) {
    return std::pow(gradient_lq_pow(u, h, q), 1.0 / q);
}

}  // namespace porelab
