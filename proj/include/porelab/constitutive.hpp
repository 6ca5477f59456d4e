#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "porelab/core/error.hpp"
#include "porelab/core/rng.hpp"
#include "porelab/core/vec.hpp"

namespace porelab {

// eta(s) = (eta0 - eta_inf) (1 + kappa0 s^a)^((r-2)/a) + eta_inf.
// Shear thinning for r < 2, thickening for r > 2, Newtonian at r = 2.
struct CarreauYasuda {
    double eta0 = 2.0;
    double eta_inf = 1.0;
    double kappa0 = 1.0;
    double r = 1.5;
    double a = 2.0;

    void validate() const {
        if (!(eta0 > 0.0) || !(eta_inf > 0.0) || !(eta0 > eta_inf))
            throw ValidationError("CarreauYasuda: need eta0 > eta_inf > 0");
        if (!(kappa0 > 0.0)) throw ValidationError("CarreauYasuda: need kappa0 > 0");
        if (!(r > 1.0)) throw ValidationError("CarreauYasuda: need r > 1");
        if (!(a >= 1.0)) throw ValidationError("CarreauYasuda: need a >= 1");
    }

    double eta(double s) const {
        if (r == 2.0) return eta0;
        return (eta0 - eta_inf) * std::pow(1.0 + kappa0 * std::pow(s, a), (r - 2.0) / a) + eta_inf;
    }
};

// eta(s) = eta0 + g(s), clamped from below by `floor` at evaluation. The
// Carreau-Yasuda law already stays above min(eta0, eta_inf), so the floor is
// inert for the shipped instances; it guards user-supplied g.
struct ViscosityLaw {
    double eta0 = 1.0;
    double r = 2.0;
    double floor = 1e-10;
    std::function<double(double)> g;
    std::string name = "newtonian";

    static ViscosityLaw newtonian(double eta0) {
        ViscosityLaw law;
        law.eta0 = eta0;
        law.r = 2.0;
        law.g = nullptr;
        law.name = "newtonian";
        return law;
    }

    static ViscosityLaw carreau_yasuda(const CarreauYasuda& cy) {
        cy.validate();
        ViscosityLaw law;
        law.eta0 = cy.eta0;
        law.r = cy.r;
        law.name = "carreau_yasuda";
        if (cy.r != 2.0) law.g = [cy](double s) { return cy.eta(s) - cy.eta0; };
        return law;
    }

    bool newtonian_part_only() const { return !g; }

    double eta(double s) const {
        if (s < 0.0) throw ValidationError("ViscosityLaw::eta: shear magnitude must be >= 0");
        const double v = g ? eta0 + g(s) : eta0;
        return std::max(v, floor);
    }
};

// eta_r(beta |D|) D, the viscous stress up to the outer scaling factor.
inline Mat3 stress(const ViscosityLaw& law, const Mat3& D, double beta) {
    if (beta < 0.0) throw ValidationError("stress: beta must be >= 0");
    if (!D.symmetric()) throw ValidationError("stress: D must be symmetric");
    return D * law.eta(beta * D.frobenius());
}

struct MonotonicityReport {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    int samples = 0;
    bool positive() const { return samples > 0 && min_ratio > 0.0; }
};

namespace detail {
inline Mat3 random_symmetric(Rng& rng) {
    Mat3 m;
    const double scale = std::pow(10.0, rng.uniform(-2.0, 2.0));
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double v = rng.normal() * scale;
            m(i, j) = v;
            m(j, i) = v;
        }
    return m;
}
}  // namespace detail

// Samples the coercivity ratio
//   [eta(b|A|)A - eta(b|B|)B] : (A-B) / (|A-B|^2 + b^{r-2} |A-B|^r 1_{r>2})
// over random symmetric pairs. Degenerate pairs (|A-B| < 1e-8) are redrawn.
inline MonotonicityReport check_monotonicity(const ViscosityLaw& law, double beta, int n_samples,
                                             std::uint64_t seed) {
    if (n_samples < 1) throw ValidationError("check_monotonicity: n_samples must be >= 1");
    Rng rng(seed);
    MonotonicityReport rep;
    rep.min_ratio = std::numeric_limits<double>::infinity();
    rep.max_ratio = -std::numeric_limits<double>::infinity();
    while (rep.samples < n_samples) {
        const Mat3 A = detail::random_symmetric(rng);
        const Mat3 B = detail::random_symmetric(rng);
        const Mat3 diff = A - B;
        const double dn = diff.frobenius();
        if (dn < 1e-8) continue;
        const Mat3 sA = stress(law, A, beta);
        const Mat3 sB = stress(law, B, beta);
        double num = 0.0;
        for (int i = 0; i < 9; ++i) num += (sA.a[i] - sB.a[i]) * diff.a[i];
        double den = dn * dn;
        if (law.r > 2.0) den += std::pow(beta, law.r - 2.0) * std::pow(dn, law.r);
        const double ratio = num / den;
        rep.min_ratio = std::min(rep.min_ratio, ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        ++rep.samples;
    }
    return rep;
}

struct GrowthReport {
    double C = 0.0;        // smallest admissible growth constant over the samples
    double arg_max = 0.0;  // shear magnitude where the envelope ratio peaks
};

// Envelope check |g(s)| <= C (s 1_{s<=1} + s^{max(r-2,0)} 1_{s>=1}) on a log
// grid over [1e-6, 1e6].
inline GrowthReport check_growth(const ViscosityLaw& law, int n_samples) {
    if (n_samples < 2) throw ValidationError("check_growth: n_samples must be >= 2");
    GrowthReport rep;
    if (law.newtonian_part_only()) return rep;
    const double lo = -6.0, hi = 6.0;
    const double p = std::max(law.r - 2.0, 0.0);
    for (int i = 0; i < n_samples; ++i) {
        const double s = std::pow(10.0, lo + (hi - lo) * i / (n_samples - 1));
        const double envelope = (s <= 1.0) ? s : std::pow(s, p);
        const double ratio = std::abs(law.g(s)) / envelope;
        if (ratio > rep.C) {
            rep.C = ratio;
            rep.arg_max = s;
        }
    }
    return rep;
}

}  // namespace porelab
