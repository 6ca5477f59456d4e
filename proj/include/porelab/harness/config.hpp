#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "porelab/constitutive.hpp"
#include "porelab/darcy.hpp"
#include "porelab/geometry.hpp"

namespace porelab {

struct LawSpec {
    std::string kind = "newtonian";
    double eta0 = 1.0;
    CarreauYasuda cy;

    ViscosityLaw make() const {
        if (kind == "newtonian") return ViscosityLaw::newtonian(eta0);
        if (kind == "carreau_yasuda") return ViscosityLaw::carreau_yasuda(cy);
        throw ValidationError("LawSpec: unknown kind '" + kind + "'");
    }

    double zero_shear() const { return kind == "newtonian" ? eta0 : cy.eta0; }

    nlohmann::json to_json() const {
        if (kind == "newtonian") return {{"kind", "newtonian"}, {"eta0", eta0}};
        return {{"kind", "carreau_yasuda"}, {"eta0", cy.eta0}, {"eta_inf", cy.eta_inf},
                {"kappa0", cy.kappa0}, {"r", cy.r},           {"a", cy.a}};
    }

    static LawSpec from_json(const nlohmann::json& j) {
        LawSpec spec;
        spec.kind = j.value("kind", "newtonian");
        if (spec.kind == "newtonian") {
            spec.eta0 = j.value("eta0", 1.0);
        } else if (spec.kind == "carreau_yasuda") {
            spec.cy.eta0 = j.value("eta0", 2.0);
            spec.cy.eta_inf = j.value("eta_inf", 1.0);
            spec.cy.kappa0 = j.value("kappa0", 1.0);
            spec.cy.r = j.value("r", 1.5);
            spec.cy.a = j.value("a", 2.0);
        } else {
            throw ValidationError("LawSpec: unknown kind '" + spec.kind + "'");
        }
        return spec;
    }
};

struct ForcingSpec {
    std::string preset = "single_mode";
    double amplitude = 1.0;
    Vec3 f0{1.0, 0.0, 0.0};

    BandLimitedField make() const {
        if (preset == "constant") return forcing_constant(f0 * amplitude);
        if (preset == "single_mode") return forcing_single_mode(amplitude);
        if (preset == "smooth_bump") return forcing_smooth_bump(amplitude);
        throw ValidationError("ForcingSpec: unknown preset '" + preset + "'");
    }

    nlohmann::json to_json() const {
        return {{"preset", preset}, {"amplitude", amplitude}, {"f0", {f0.x, f0.y, f0.z}}};
    }

    static ForcingSpec from_json(const nlohmann::json& j) {
        ForcingSpec spec;
        spec.preset = j.value("preset", "single_mode");
        spec.amplitude = j.value("amplitude", 1.0);
        if (j.contains("f0")) {
            auto v = j.at("f0").get<std::vector<double>>();
            spec.f0 = {v.at(0), v.at(1), v.at(2)};
        }
        return spec;
    }
};

// Grid rule: the smallest lattice-compatible n that clears both the floor and
// the hole-resolution requirement (cells_per_diameter across the scaled hole).
struct GridRule {
    int n_min = 64;
    double cells_per_diameter = 4.0;
    int n_max = 288;
    std::vector<int> n_override;  // optional per-epsilon choice

    int pick(double epsilon, double alpha, const HoleShape& hole, std::size_t index) const {
        const int per = static_cast<int>(std::llround(1.0 / epsilon));
        if (index < n_override.size()) {
            const int n = n_override[index];
            if (n % per != 0)
                throw ValidationError("GridRule: override n does not tile 1/epsilon");
            return n;
        }
        double need = n_min;
        if (!hole.empty()) {
            const double diam = 2.0 * std::pow(epsilon, alpha) * hole.bounding_radius();
            need = std::max(need, cells_per_diameter / diam);
        }
        int n = static_cast<int>(std::ceil(need));
        n = ((n + per - 1) / per) * per;
        if (n > n_max)
            throw ResolvabilityError(
                "GridRule: required n exceeds n_max; enlarge the hole or raise n_max", n);
        return n;
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"n_min", n_min},
                         {"cells_per_diameter", cells_per_diameter},
                         {"n_max", n_max}};
        if (!n_override.empty()) j["n_override"] = n_override;
        return j;
    }

    static GridRule from_json(const nlohmann::json& j) {
        GridRule g;
        g.n_min = j.value("n_min", 64);
        g.cells_per_diameter = j.value("cells_per_diameter", 4.0);
        g.n_max = j.value("n_max", 288);
        if (j.contains("n_override")) g.n_override = j.at("n_override").get<std::vector<int>>();
        return g;
    }
};

struct ExperimentConfig {
    std::string name = "sweep";
    double alpha = 2.0;
    HoleShape hole = HoleShape::ball(0.25);
    Vec3 x0{0, 0, 0};
    std::vector<double> epsilons{0.25, 0.125};
    GridRule grid;
    LawSpec law;
    double lambda = 3.0;
    ForcingSpec forcing;
    std::string mode = "stationary";  // or "evolutionary"
    double dt = 0.0;
    double t_end = 0.0;
    std::string u0 = "darcy";  // or "zero"
    double tol = 1e-8;
    int max_iter = 40;
    std::vector<double> perm_R{16.0, 32.0};
    int perm_n = 96;
    std::string perm_file;  // optional precomputed permeability JSON
    std::uint64_t seed = 0;
    int workers = 1;

    void validate() const {
        if (epsilons.empty()) throw ValidationError("ExperimentConfig: empty epsilon list");
        for (std::size_t i = 0; i < epsilons.size(); ++i) {
            PerforationSpec spec = perforation(epsilons[i]);
            spec.cells_per_axis();
            if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
                throw ValidationError("ExperimentConfig: epsilons must be strictly decreasing");
        }
        if (!(lambda > alpha)) throw ValidationError("ExperimentConfig: lambda must exceed alpha");
        if (mode != "stationary" && mode != "evolutionary")
            throw ValidationError("ExperimentConfig: mode must be stationary or evolutionary");
        if (mode == "evolutionary" && !(dt > 0.0 && t_end > 0.0))
            throw ValidationError("ExperimentConfig: evolutionary mode needs dt and t_end");
    }

    PerforationSpec perforation(double epsilon) const {
        PerforationSpec spec;
        spec.epsilon = epsilon;
        spec.alpha = alpha;
        spec.hole = hole;
        spec.x0 = x0;
        return spec;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["name"] = name;
        j["alpha"] = alpha;
        if (hole.kind == HoleShape::Kind::Ball)
            j["hole"] = {{"kind", "ball"}, {"rho", hole.rho}};
        else
            j["hole"] = {{"kind", "voxel"}};
        j["x0"] = {x0.x, x0.y, x0.z};
        j["epsilons"] = epsilons;
        j["grid"] = grid.to_json();
        j["law"] = law.to_json();
        j["lambda"] = lambda;
        j["forcing"] = forcing.to_json();
        j["mode"] = mode;
        if (mode == "evolutionary") {
            j["dt"] = dt;
            j["t_end"] = t_end;
            j["u0"] = u0;
        }
        j["tol"] = tol;
        j["max_iter"] = max_iter;
        j["perm"] = {{"R_list", perm_R}, {"n", perm_n}};
        if (!perm_file.empty()) j["perm"]["file"] = perm_file;
        j["seed"] = seed;
        j["workers"] = workers;
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        c.name = j.value("name", "sweep");
        c.alpha = j.value("alpha", 2.0);
        if (j.contains("hole")) {
            const auto& h = j.at("hole");
            const std::string kind = h.value("kind", "ball");
            if (kind == "ball") {
                c.hole = HoleShape::ball(h.value("rho", 0.25));
            } else if (kind == "voxel") {
                const std::string file = h.at("file").get<std::string>();
                auto mask = load_mask(file);
                if (mask.dims.nx != HoleShape::kVoxelGrid)
                    throw ValidationError("hole voxel file must be 64^3");
                c.hole = HoleShape::voxel(mask.solid);
            } else {
                throw ValidationError("ExperimentConfig: unknown hole kind");
            }
        }
        if (j.contains("x0")) {
            auto v = j.at("x0").get<std::vector<double>>();
            c.x0 = {v.at(0), v.at(1), v.at(2)};
        }
        if (j.contains("epsilons")) c.epsilons = j.at("epsilons").get<std::vector<double>>();
        if (j.contains("grid")) c.grid = GridRule::from_json(j.at("grid"));
        if (j.contains("law")) c.law = LawSpec::from_json(j.at("law"));
        c.lambda = j.value("lambda", c.alpha + 1.0);
        if (j.contains("forcing")) c.forcing = ForcingSpec::from_json(j.at("forcing"));
        c.mode = j.value("mode", "stationary");
        c.dt = j.value("dt", 0.0);
        c.t_end = j.value("t_end", 0.0);
        c.u0 = j.value("u0", "darcy");
        c.tol = j.value("tol", 1e-8);
        c.max_iter = j.value("max_iter", 40);
        if (j.contains("perm")) {
            const auto& p = j.at("perm");
            if (p.contains("R_list")) c.perm_R = p.at("R_list").get<std::vector<double>>();
            c.perm_n = p.value("n", 96);
            c.perm_file = p.value("file", std::string{});
        }
        c.seed = j.value("seed", 0ull);
        c.workers = j.value("workers", 1);
        return c;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ValidationError("ExperimentConfig: cannot open " + path);
        return from_json(nlohmann::json::parse(is));
    }
};

}  // namespace porelab
