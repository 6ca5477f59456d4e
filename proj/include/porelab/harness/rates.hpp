#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "porelab/core/error.hpp"
#include "porelab/geometry.hpp"
#include "porelab/stokes/mac_ops.hpp"

namespace porelab {

enum class RateSetting {
    TorusStationary,
    TorusEvolutionary,
    BoundedStationary,
    BoundedEvolutionary,
};

inline std::string to_string(RateSetting s) {
    switch (s) {
        case RateSetting::TorusStationary: return "torus-stationary";
        case RateSetting::TorusEvolutionary: return "torus-evolutionary";
        case RateSetting::BoundedStationary: return "bounded-stationary";
        case RateSetting::BoundedEvolutionary: return "bounded-evolutionary";
    }
    return "?";
}

// Exponent of the squared-L2 velocity error. The evolutionary settings share
// the stationary exponents; the initial-datum term is reported separately and
// vanishes when u0 matches the limit at t=0.
inline double predicted_exponent(double alpha, bool newtonian, RateSetting setting) {
    if (newtonian) {
        if (!(alpha > 1.0 && alpha < 3.0))
            throw ValidationError(
                "predicted_exponent: the Newtonian torus rate needs alpha in (1,3)");
    } else {
        if (!(alpha > 1.0 && alpha < 1.5))
            throw ValidationError(
                "predicted_exponent: the non-Newtonian rate needs alpha in (1,3/2)");
    }
    const bool bounded =
        setting == RateSetting::BoundedStationary || setting == RateSetting::BoundedEvolutionary;
    const double boundary_term = bounded ? 0.5 * (3.0 - alpha) : 3.0 - alpha;
    double rate = std::min(alpha - 1.0, boundary_term);
    if (!newtonian) rate = std::min(rate, 2.0 * (3.0 - 2.0 * alpha));
    return rate;
}

// Exponent of the L1 pressure error on the stationary torus. The open-ended
//"s minus" entries are realized as s - margin with the margin recorded.
struct PressureExponent {
    double value = 0.0;
    double margin = 0.01;
};

inline PressureExponent predicted_pressure_exponent(double alpha, double lambda, double r,
                                                    bool newtonian, double margin = 0.01) {
    if (newtonian) {
        if (!(alpha > 1.0 && alpha < 3.0))
            throw ValidationError(
                "predicted_pressure_exponent: Newtonian pressure rate needs alpha in (1,3)");
    } else {
        if (!(alpha > 1.0 && alpha < 1.5))
            throw ValidationError(
                "predicted_pressure_exponent: non-Newtonian pressure rate needs alpha in (1,3/2)");
    }
    if (!(lambda > alpha))
        throw ValidationError("predicted_pressure_exponent: needs lambda > alpha");
    PressureExponent out;
    out.margin = margin;
    double v = std::min(0.5 * (alpha - 1.0), 0.5 * (3.0 - alpha));
    v = std::min(v, (lambda - alpha) - margin);
    if (!newtonian) {
        v = std::min(v, (3.0 - 2.0 * alpha) - margin);
        if (r > 2.0) v = std::min(v, (3.0 - 2.0 * alpha) * (r - 2.0) / r);
    }
    out.value = v;
    return out;
}

struct RateFit {
    double slope = 0.0;
    std::vector<double> pairwise;
};

// Least-squares slope of log(error) against log(eps), plus adjacent-pair slopes.
inline RateFit fit_rate(const std::vector<double>& eps_list, const std::vector<double>& errors) {
    if (eps_list.size() != errors.size() || eps_list.size() < 2)
        throw ValidationError("fit_rate: need >= 2 points");
    for (double e : errors)
        if (!(e > 0.0)) throw ValidationError("fit_rate: errors must be positive");
    const int n = static_cast<int>(eps_list.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = std::log(eps_list[i]);
        const double y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    RateFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    for (int i = 0; i + 1 < n; ++i)
        fit.pairwise.push_back(std::log(errors[i] / errors[i + 1]) /
                               std::log(eps_list[i] / eps_list[i + 1]));
    return fit;
}

// Relative-energy diagnostic: int (1/2) eps^lambda |u - U|^2 over fluid cells.
inline double relative_energy(const MacField& u_eps, const MacField& U, double lambda,
                              double epsilon, const DomainMask& mask) {
    if (!(u_eps.dims() == U.dims()) || !(u_eps.dims() == mask.dims))
        throw ValidationError("relative_energy: grid mismatch");
    MacField diff = U;
    zero_fixed_faces(diff, mask);  // U must vanish on the holes
    axpy(-1.0, u_eps, diff);
    zero_fixed_faces(diff, mask);
    const double n2 = dot(diff, diff) * std::pow(mask.h, 3);
    return 0.5 * std::pow(epsilon, lambda) * n2;
}

}  // namespace porelab
