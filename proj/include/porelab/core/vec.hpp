#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "porelab/core/error.hpp"

namespace porelab {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Dense 3x3 matrix, row-major.
struct Mat3 {
    std::array<double, 9> a{};

    double& operator()(int i, int j) { return a[3 * i + j]; }
    double operator()(int i, int j) const { return a[3 * i + j]; }

    static Mat3 identity() {
        Mat3 m;
        m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
        return m;
    }
    static Mat3 diag(double d0, double d1, double d2) {
        Mat3 m;
        m(0, 0) = d0;
        m(1, 1) = d1;
        m(2, 2) = d2;
        return m;
    }

    Mat3 operator+(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.a[i] = a[i] + o.a[i];
        return r;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.a[i] = a[i] - o.a[i];
        return r;
    }
    Mat3 operator*(double s) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.a[i] = a[i] * s;
        return r;
    }
    Vec3 operator*(const Vec3& v) const {
        return {a[0] * v.x + a[1] * v.y + a[2] * v.z,
                a[3] * v.x + a[4] * v.y + a[5] * v.z,
                a[6] * v.x + a[7] * v.y + a[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }

    Mat3 transpose() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }

    double frobenius() const {
        double s = 0;
        for (double v : a) s += v * v;
        return std::sqrt(s);
    }

    double det() const {
        return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
               a[2] * (a[3] * a[7] - a[4] * a[6]);
    }

    Mat3 inverse() const {
        double d = det();
        if (std::abs(d) < 1e-300) throw NumericalQualityError("Mat3::inverse: singular matrix");
        Mat3 r;
        r(0, 0) = (a[4] * a[8] - a[5] * a[7]) / d;
        r(0, 1) = (a[2] * a[7] - a[1] * a[8]) / d;
        r(0, 2) = (a[1] * a[5] - a[2] * a[4]) / d;
        r(1, 0) = (a[5] * a[6] - a[3] * a[8]) / d;
        r(1, 1) = (a[0] * a[8] - a[2] * a[6]) / d;
        r(1, 2) = (a[2] * a[3] - a[0] * a[5]) / d;
        r(2, 0) = (a[3] * a[7] - a[4] * a[6]) / d;
        r(2, 1) = (a[1] * a[6] - a[0] * a[7]) / d;
        r(2, 2) = (a[0] * a[4] - a[1] * a[3]) / d;
        return r;
    }

    bool symmetric(double rel_tol = 1e-12) const {
        double scale = frobenius();
        double dev = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) dev = std::max(dev, std::abs((*this)(i, j) - (*this)(j, i)));
        return dev <= rel_tol * std::max(scale, 1e-300);
    }
};

// Eigenvalues of a symmetric 3x3 matrix (ascending), via the trigonometric
// closed form for the characteristic cubic.
inline std::array<double, 3> sym_eigenvalues(const Mat3& m) {
    const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
    const double tr = m(0, 0) + m(1, 1) + m(2, 2);
    if (p1 < 1e-300) {
        std::array<double, 3> ev{m(0, 0), m(1, 1), m(2, 2)};
        std::sort(ev.begin(), ev.end());
        return ev;
    }
    const double q = tr / 3.0;
    const double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
                      (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Mat3 b = (m - Mat3::diag(q, q, q)) * (1.0 / p);
    double r = b.det() / 2.0;
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    const double e2 = tr - e1 - e3;
    std::array<double, 3> ev{e1, e2, e3};
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace porelab
