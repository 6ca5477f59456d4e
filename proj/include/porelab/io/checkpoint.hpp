#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "porelab/flowsolver.hpp"
#include "porelab/harness/config.hpp"

namespace porelab {

// Field checkpoint: JSON header plus a flat binary of the three face-normal
// velocity arrays followed by the cell pressures (n^3 doubles each).
inline void save_checkpoint(const std::string& prefix, const StaggeredField& field,
                            const PerforationSpec& spec, double lambda, const LawSpec& law,
                            int iteration, double residual) {
    const GridDims d = field.u.dims();
    nlohmann::json hdr;
    hdr["n"] = d.nx;
    hdr["epsilon"] = spec.epsilon;
    hdr["alpha"] = spec.alpha;
    hdr["lambda"] = lambda;
    hdr["law"] = law.to_json();
    hdr["iteration"] = iteration;
    hdr["residual"] = residual;
    std::ofstream js(prefix + ".json");
    if (!js) throw ValidationError("save_checkpoint: cannot open " + prefix + ".json");
    js << hdr.dump(2) << "\n";

    std::ofstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw ValidationError("save_checkpoint: cannot open " + prefix + ".bin");
    for (int c = 0; c < 3; ++c)
        bin.write(reinterpret_cast<const char*>(field.u.comp[c].data()),
                  static_cast<std::streamsize>(field.u.comp[c].size() * sizeof(double)));
    bin.write(reinterpret_cast<const char*>(field.p.data()),
              static_cast<std::streamsize>(field.p.size() * sizeof(double)));
}

struct CheckpointHeader {
    int n = 0;
    double epsilon = 0, alpha = 0, lambda = 0, residual = 0;
    int iteration = 0;
    LawSpec law;
};

inline CheckpointHeader load_checkpoint(const std::string& prefix, StaggeredField& field) {
    std::ifstream js(prefix + ".json");
    if (!js) throw ValidationError("load_checkpoint: cannot open " + prefix + ".json");
    nlohmann::json hdr = nlohmann::json::parse(js);
    CheckpointHeader out;
    out.n = hdr.at("n").get<int>();
    out.epsilon = hdr.value("epsilon", 0.0);
    out.alpha = hdr.value("alpha", 0.0);
    out.lambda = hdr.value("lambda", 0.0);
    out.iteration = hdr.value("iteration", 0);
    out.residual = hdr.value("residual", 0.0);
    if (hdr.contains("law")) out.law = LawSpec::from_json(hdr.at("law"));

    const GridDims d{out.n, out.n, out.n};
    field = StaggeredField(d, 1.0 / out.n);
    std::ifstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw ValidationError("load_checkpoint: cannot open " + prefix + ".bin");
    for (int c = 0; c < 3; ++c)
        bin.read(reinterpret_cast<char*>(field.u.comp[c].data()),
                 static_cast<std::streamsize>(field.u.comp[c].size() * sizeof(double)));
    bin.read(reinterpret_cast<char*>(field.p.data()),
             static_cast<std::streamsize>(field.p.size() * sizeof(double)));
    if (!bin) throw ValidationError("load_checkpoint: truncated binary payload");
    return out;
}

}  // namespace porelab
