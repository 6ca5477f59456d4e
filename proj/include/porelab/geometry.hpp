#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "porelab/core/array3.hpp"
#include "porelab/core/error.hpp"
#include "porelab/core/vec.hpp"

namespace porelab {

// Reference hole shape, described in the coordinates of the unscaled model
// hole (the domain hole is this shape scaled by epsilon^alpha). Balls carry an
// explicit radius; general shapes come as a 64^3 voxel mask over the box
// [-1/8, 1/8]^3.
struct HoleShape {
    enum class Kind { Ball, Voxel } kind = Kind::Ball;
    double rho = 0.25;
    ByteField3 voxels;  // Kind::Voxel only

    static constexpr int kVoxelGrid = 64;
    static constexpr double kVoxelHalfWidth = 0.125;

    static HoleShape ball(double radius) {
        HoleShape s;
        s.kind = Kind::Ball;
        s.rho = radius;
        return s;
    }

    static HoleShape voxel(ByteField3 mask) {
        if (mask.dims() != GridDims{kVoxelGrid, kVoxelGrid, kVoxelGrid})
            throw ValidationError("HoleShape::voxel: reference mask must be 64^3");
        HoleShape s;
        s.kind = Kind::Voxel;
        s.voxels = std::move(mask);
        s.rho = 0.0;
        for (int i = 0; i < kVoxelGrid; ++i)
            for (int j = 0; j < kVoxelGrid; ++j)
                for (int k = 0; k < kVoxelGrid; ++k)
                    if (s.voxels(i, j, k)) s.rho = std::max(s.rho, s.voxel_center(i, j, k).norm());
        if (s.rho == 0.0) throw ValidationError("HoleShape::voxel: reference mask is empty");
        return s;
    }

    Vec3 voxel_center(int i, int j, int k) const {
        const double w = 2.0 * kVoxelHalfWidth / kVoxelGrid;
        return {-kVoxelHalfWidth + (i + 0.5) * w, -kVoxelHalfWidth + (j + 0.5) * w,
                -kVoxelHalfWidth + (k + 0.5) * w};
    }

    bool empty() const { return kind == Kind::Ball && rho == 0.0; }

    // Radius of the smallest origin-centered ball containing the shape.
    double bounding_radius() const { return rho; }

    // Shape volume in reference coordinates (exact for balls, voxel count for
    // masks at the reference resolution).
    double volume() const {
        if (kind == Kind::Ball) return (4.0 * M_PI / 3.0) * rho * rho * rho;
        const double w = 2.0 * kVoxelHalfWidth / kVoxelGrid;
        long long count = 0;
        for (auto v : voxels.raw())
            if (v) ++count;
        return static_cast<double>(count) * w * w * w;
    }

    // Nearest-neighbor point query in reference coordinates.
    bool contains(const Vec3& y) const {
        if (kind == Kind::Ball) return rho > 0.0 && y.norm() <= rho;
        const double w = 2.0 * kVoxelHalfWidth / kVoxelGrid;
        const int i = static_cast<int>(std::floor((y.x + kVoxelHalfWidth) / w));
        const int j = static_cast<int>(std::floor((y.y + kVoxelHalfWidth) / w));
        const int k = static_cast<int>(std::floor((y.z + kVoxelHalfWidth) / w));
        if (i < 0 || j < 0 || k < 0 || i >= kVoxelGrid || j >= kVoxelGrid || k >= kVoxelGrid)
            return false;
        return voxels(i, j, k) != 0;
    }
};

// Geometry of the perforated unit torus: holes of size epsilon^alpha placed on
// the epsilon-lattice shifted by epsilon*x0.
struct PerforationSpec {
    double epsilon = 0.25;
    double alpha = 2.0;
    HoleShape hole;
    Vec3 x0{0, 0, 0};

    int cells_per_axis() const {
        const double inv = 1.0 / epsilon;
        const int m = static_cast<int>(std::llround(inv));
        if (m < 1 || std::abs(inv - m) > 1e-9 * std::max(1.0, inv))
            throw ValidationError("PerforationSpec: 1/epsilon must be a positive integer");
        return m;
    }

    double hole_radius() const { return std::pow(epsilon, alpha) * hole.bounding_radius(); }

    void validate() const {
        cells_per_axis();
        if (!(alpha > 1.0 && alpha < 3.0))
            throw ValidationError("PerforationSpec: alpha must lie in (1,3)");
        for (int c = 0; c < 3; ++c)
            if (!(x0[c] > -0.5 && x0[c] < 0.5))
                throw ValidationError("PerforationSpec: x0 must lie in (-1/2,1/2)^3");
        if (hole_radius() > 0.5 * epsilon * (1.0 + 1e-12))
            throw ValidationError("PerforationSpec: scaled hole does not fit inside its cell");
    }
};

struct GridSpec {
    int n = 64;
    double h() const { return 1.0 / n; }
};

struct DomainMask {
    GridDims dims;
    double h = 0.0;
    ByteField3 solid;          // 1 on cells inside a hole
    ByteField3 face_solid[3];  // 1 on faces with a solid neighbor cell
    double porosity = 1.0;
    long long solid_cells = 0;

    bool all_fluid() const { return solid_cells == 0; }
};

// Hole centers {eps (x0 + k) mod 1 : k in {0..1/eps-1}^3}, z fastest.
inline std::vector<Vec3> hole_centers(const PerforationSpec& spec) {
    const int m = spec.cells_per_axis();
    std::vector<Vec3> centers;
    centers.reserve(static_cast<std::size_t>(m) * m * m);
    auto fold = [](double v) {
        v = std::fmod(v, 1.0);
        return v < 0.0 ? v + 1.0 : v;
    };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                centers.push_back({fold(spec.epsilon * (spec.x0.x + i)),
                                   fold(spec.epsilon * (spec.x0.y + j)),
                                   fold(spec.epsilon * (spec.x0.z + k))});
    return centers;
}

// Pure invariant report; empty means the (spec, grid) pair matches the model
// assumptions. Nothing is thrown here.
inline std::vector<std::string> validate_spec(const PerforationSpec& spec, const GridSpec& grid) {
    std::vector<std::string> issues;
    const double inv = 1.0 / spec.epsilon;
    const int m = static_cast<int>(std::llround(inv));
    const bool tiles = m >= 1 && std::abs(inv - m) <= 1e-9 * std::max(1.0, inv);
    if (!tiles) issues.push_back("tiling violation: 1/epsilon is not a positive integer");
    if (tiles && grid.n % m != 0)
        issues.push_back("tiling violation: grid n=" + std::to_string(grid.n) +
                         " is not a multiple of 1/epsilon=" + std::to_string(m));
    if (!(spec.alpha > 1.0 && spec.alpha < 3.0))
        issues.push_back("alpha range violation: alpha must lie in (1,3)");
    if (spec.hole.bounding_radius() > 0.125 && !spec.hole.empty())
        issues.push_back("containment violation: reference hole exits B(0, 1/8)");
    for (int c = 0; c < 3; ++c)
        if (!(spec.x0[c] > -0.5 && spec.x0[c] < 0.5)) {
            issues.push_back("offset violation: x0 must lie in (-1/2,1/2)^3");
            break;
        }
    if (tiles && !spec.hole.empty()) {
        const double diam = 2.0 * std::pow(spec.epsilon, spec.alpha) * spec.hole.bounding_radius();
        if (diam < 4.0 * grid.h() * (1.0 - 1e-12))
            issues.push_back("resolvability violation: hole diameter spans fewer than 4 cells");
    }
    return issues;
}

namespace detail {
inline double periodic_delta(double a, double b) {
    double d = a - b;
    d -= std::round(d);
    return d;
}
}  // namespace detail

// Voxelizes the perforated torus: a cell is solid iff its center lies inside a
// hole. Deterministic in (spec, grid).
inline DomainMask build_mask(const PerforationSpec& spec, const GridSpec& grid) {
    spec.validate();
    const int m = spec.cells_per_axis();
    if (grid.n % m != 0)
        throw ValidationError("build_mask: grid n must be a multiple of 1/epsilon");
    const int n = grid.n;
    const double h = grid.h();

    DomainMask mask;
    mask.dims = {n, n, n};
    mask.h = h;
    mask.solid = ByteField3(mask.dims, 0);
    for (auto& f : mask.face_solid) f = ByteField3(mask.dims, 0);

    if (!spec.hole.empty()) {
        const double scale = std::pow(spec.epsilon, spec.alpha);
        const double radius = scale * spec.hole.bounding_radius();
        if (2.0 * radius < 4.0 * h * (1.0 - 1e-12)) {
            int req = static_cast<int>(std::ceil(2.0 / radius));
            req = ((req + m - 1) / m) * m;
            throw ResolvabilityError(
                "build_mask: hole diameter spans fewer than 4 cells; need n >= " + std::to_string(req),
                req);
        }

        const auto centers = hole_centers(spec);
        const int reach = static_cast<int>(std::ceil(radius / h)) + 1;
        for (const auto& c : centers) {
            const int ic = static_cast<int>(std::floor(c.x / h));
            const int jc = static_cast<int>(std::floor(c.y / h));
            const int kc = static_cast<int>(std::floor(c.z / h));
            for (int di = -reach; di <= reach; ++di)
                for (int dj = -reach; dj <= reach; ++dj)
                    for (int dk = -reach; dk <= reach; ++dk) {
                        const int i = wrap(ic + di, n), j = wrap(jc + dj, n), k = wrap(kc + dk, n);
                        const Vec3 y{detail::periodic_delta((i + 0.5) * h, c.x) / scale,
                                     detail::periodic_delta((j + 0.5) * h, c.y) / scale,
                                     detail::periodic_delta((k + 0.5) * h, c.z) / scale};
                        if (spec.hole.contains(y)) mask.solid(i, j, k) = 1;
                    }
        }
    }

    long long count = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (mask.solid(i, j, k)) ++count;
                const bool si = mask.solid(i, j, k);
                if (si || mask.solid.at(i - 1, j, k)) mask.face_solid[0](i, j, k) = 1;
                if (si || mask.solid.at(i, j - 1, k)) mask.face_solid[1](i, j, k) = 1;
                if (si || mask.solid.at(i, j, k - 1)) mask.face_solid[2](i, j, k) = 1;
            }
    mask.solid_cells = count;
    mask.porosity = 1.0 - static_cast<double>(count) / static_cast<double>(mask.dims.size());
    return mask;
}

// Analytic solid fraction of the ball model: (1/eps)^3 (4pi/3)(eps^alpha rho)^3.
inline double analytic_solid_fraction(const PerforationSpec& spec) {
    if (spec.hole.kind != HoleShape::Kind::Ball) throw ValidationError("analytic fraction needs a ball hole");
    const double r = spec.hole_radius();
    const double m = 1.0 / spec.epsilon;
    return m * m * m * (4.0 * M_PI / 3.0) * r * r * r;
}

// --- mask file format: flat binary of n^3 bytes plus a JSON sidecar ---

inline void save_mask(const DomainMask& mask, const PerforationSpec& spec,
                      const std::string& path_prefix) {
    std::ofstream bin(path_prefix + ".bin", std::ios::binary);
    if (!bin) throw ValidationError("save_mask: cannot open " + path_prefix + ".bin");
    bin.write(reinterpret_cast<const char*>(mask.solid.data()),
              static_cast<std::streamsize>(mask.solid.size()));

    nlohmann::json hdr;
    hdr["n"] = mask.dims.nx;
    hdr["epsilon"] = spec.epsilon;
    hdr["alpha"] = spec.alpha;
    hdr["x0"] = {spec.x0.x, spec.x0.y, spec.x0.z};
    if (spec.hole.kind == HoleShape::Kind::Ball)
        hdr["shape"] = {{"kind", "ball"}, {"rho", spec.hole.rho}};
    else
        hdr["shape"] = {{"kind", "voxel"}, {"grid", HoleShape::kVoxelGrid}};
    std::ofstream js(path_prefix + ".json");
    js << hdr.dump(2) << "\n";
}

inline DomainMask load_mask(const std::string& path_prefix) {
    std::ifstream js(path_prefix + ".json");
    if (!js) throw ValidationError("load_mask: cannot open " + path_prefix + ".json");
    nlohmann::json hdr = nlohmann::json::parse(js);
    const int n = hdr.at("n").get<int>();

    DomainMask mask;
    mask.dims = {n, n, n};
    mask.h = 1.0 / n;
    mask.solid = ByteField3(mask.dims, 0);
    std::ifstream bin(path_prefix + ".bin", std::ios::binary);
    if (!bin) throw ValidationError("load_mask: cannot open " + path_prefix + ".bin");
    bin.read(reinterpret_cast<char*>(mask.solid.data()), static_cast<std::streamsize>(mask.solid.size()));
    if (bin.gcount() != static_cast<std::streamsize>(mask.solid.size()))
        throw ValidationError("load_mask: truncated mask binary");

    for (auto& f : mask.face_solid) f = ByteField3(mask.dims, 0);
    long long count = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const bool si = mask.solid(i, j, k);
                if (si) ++count;
                if (si || mask.solid.at(i - 1, j, k)) mask.face_solid[0](i, j, k) = 1;
                if (si || mask.solid.at(i, j - 1, k)) mask.face_solid[1](i, j, k) = 1;
                if (si || mask.solid.at(i, j, k - 1)) mask.face_solid[2](i, j, k) = 1;
            }
    mask.solid_cells = count;
    mask.porosity = 1.0 - static_cast<double>(count) / static_cast<double>(mask.dims.size());
    return mask;
}

}  // namespace porelab
