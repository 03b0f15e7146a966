#pragma once

// Run configuration: a single structured text file (JSON) with a versioned
// schema, validated on load. All quantities are in the dimensionless
// canonical units of the scaled formulation: the midsurface omega is measured
// in units of its own length scale, the half-thickness equals eps, Lame
// moduli are in units of a reference stiffness, loads in the matching force
// density. A canonical serialization (fixed key order, 17-digit floats)
// feeds the FNV-1a config hash carried by every report row.

#include "cell.hpp"
#include "corrector.hpp"
#include "plate.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace homplate {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-component midsurface load polynomial: c0 + c1 x1 + c2 x2 + c3 x1 x2.
using LoadPoly = std::array<double, 4>;

struct RunConfig {
    int schema_version = 1;

    // microstructure
    CellGeometry geometry;
    std::vector<IsotropicPhase> phases;
    std::array<int, 3> cell_resolution = {4, 4, 4};

    // midsurface
    double l1 = 1.0, l2 = 1.0;
    std::array<bool, 4> clamped = {true, true, true, true};
    int plate_nx = 16, plate_ny = 16;

    // load and scaling exponent
    std::array<LoadPoly, 3> load = {LoadPoly{0, 0, 0, 0}, LoadPoly{0, 0, 0, 0},
                                    LoadPoly{1, 0, 0, 0}};
    int a = 1;

    // study ladders
    std::vector<double> eps_ladder = {0.25, 0.125, 0.0625};
    std::vector<double> h_ladder = {1e-1, 1e-2, 1e-3, 1e-4};

    // solver / normalization / reconstruction knobs
    double cell_tolerance = 1e-10;
    double fine_tolerance = 1e-12;
    bool normalize_by_material = false;
    double cutoff_cells = 2.0;
    int n_smoothing = 1;
    uint64_t seed = 1234;
};

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline LoadSpec make_load(const RunConfig& cfg) {
    LoadSpec s;
    for (int c = 0; c < 3; ++c) {
        const LoadPoly p = cfg.load[static_cast<size_t>(c)];
        s.f[static_cast<size_t>(c)] = [p](double x1, double x2) {
            return p[0] + p[1] * x1 + p[2] * x2 + p[3] * x1 * x2;
        };
    }
    return s;
}

inline std::vector<HookeTensor> config_hooke(const RunConfig& cfg) {
    std::vector<HookeTensor> out;
    for (const auto& p : cfg.phases)
        out.push_back(HookeTensor::isotropic(p.lambda, p.mu));
    return out;
}

namespace detail {

inline void append_primitive(std::string& s, const PhasePrimitive& p) {
    switch (p.kind) {
        case PhasePrimitive::Kind::Box:
            s += "box;" + std::to_string(p.phase);
            for (int d = 0; d < 3; ++d) s += ";" + format_g17(p.lo[d]);
            for (int d = 0; d < 3; ++d) s += ";" + format_g17(p.hi[d]);
            break;
        case PhasePrimitive::Kind::CylinderZ:
            s += "cylinder_z;" + std::to_string(p.phase) + ";" + format_g17(p.c1) + ";" +
                 format_g17(p.c2) + ";" + format_g17(p.r) + ";" + format_g17(p.z0) + ";" +
                 format_g17(p.z1);
            break;
        case PhasePrimitive::Kind::Slab:
            s += "slab;" + std::to_string(p.phase) + ";" + format_g17(p.z0) + ";" +
                 format_g17(p.z1);
            break;
    }
    s += "|";
}

}  // namespace detail

/// Canonical serialization: fixed field order, locale-independent floats.
inline std::string canonical_config_string(const RunConfig& cfg) {
    std::string s = "schema=" + std::to_string(cfg.schema_version) + "|";
    s += "default_phase=" + std::to_string(cfg.geometry.default_phase) + "|";
    s += "void_phase=" + std::to_string(cfg.geometry.void_phase) + "|";
    for (const auto& p : cfg.geometry.primitives) detail::append_primitive(s, p);
    for (const auto& p : cfg.phases)
        s += "phase;" + format_g17(p.lambda) + ";" + format_g17(p.mu) + "|";
    for (int d = 0; d < 3; ++d) s += "res=" + std::to_string(cfg.cell_resolution[d]) + "|";
    s += "omega=" + format_g17(cfg.l1) + ";" + format_g17(cfg.l2) + "|";
    for (bool c : cfg.clamped) s += c ? "c1" : "c0";
    s += "|plate=" + std::to_string(cfg.plate_nx) + ";" + std::to_string(cfg.plate_ny) + "|";
    for (const auto& lp : cfg.load) {
        s += "load";
        for (double v : lp) s += ";" + format_g17(v);
        s += "|";
    }
    s += "a=" + std::to_string(cfg.a) + "|eps=";
    for (double e : cfg.eps_ladder) s += format_g17(e) + ";";
    s += "|h=";
    for (double h : cfg.h_ladder) s += format_g17(h) + ";";
    s += "|tol=" + format_g17(cfg.cell_tolerance) + ";" + format_g17(cfg.fine_tolerance);
    s += "|norm=" + std::string(cfg.normalize_by_material ? "material" : "cell");
    s += "|cutoff=" + format_g17(cfg.cutoff_cells);
    s += "|smooth=" + std::to_string(cfg.n_smoothing);
    s += "|seed=" + std::to_string(cfg.seed);
    return s;
}

inline uint64_t config_hash(const RunConfig& cfg) {
    return fnv1a_str(canonical_config_string(cfg));
}

/// Cache key of the corrector set: microstructure + resolution + tolerance
/// only, so unrelated config edits reuse the cache but stale correctors are
/// never picked up.
inline uint64_t corrector_cache_key(const RunConfig& cfg) {
    std::string s = "default_phase=" + std::to_string(cfg.geometry.default_phase) + "|";
    s += "void_phase=" + std::to_string(cfg.geometry.void_phase) + "|";
    for (const auto& p : cfg.geometry.primitives) detail::append_primitive(s, p);
    for (const auto& p : cfg.phases)
        s += "phase;" + format_g17(p.lambda) + ";" + format_g17(p.mu) + "|";
    for (int d = 0; d < 3; ++d) s += "res=" + std::to_string(cfg.cell_resolution[d]) + "|";
    s += "tol=" + format_g17(cfg.cell_tolerance);
    return fnv1a_str(s);
}

inline void validate_config(const RunConfig& cfg) {
    if (cfg.schema_version != 1)
        throw ConfigError("unsupported schema_version " +
                          std::to_string(cfg.schema_version));
    if (cfg.phases.empty()) throw ConfigError("at least one material phase is required");
    for (const auto& p : cfg.phases) {
        if (p.lambda < 0.0) throw ConfigError("lame_lambda must be >= 0");
        if (!(p.mu > 0.0)) throw ConfigError("lame_mu must be > 0");
    }
    for (int d = 0; d < 3; ++d)
        if (cfg.cell_resolution[d] < 2)
            throw ConfigError("cell resolution must be >= 2 per direction");
    if (!(cfg.l1 > 0.0) || !(cfg.l2 > 0.0)) throw ConfigError("omega sides must be positive");
    if (cfg.plate_nx < 1 || cfg.plate_ny < 1) throw ConfigError("plate grid must be >= 1");
    if (!(cfg.clamped[0] || cfg.clamped[1] || cfg.clamped[2] || cfg.clamped[3]))
        throw ConfigError("at least one clamped edge is required");
    if (cfg.a < 1) throw ConfigError("exponent a must be >= 1");
    if (cfg.eps_ladder.empty() || cfg.h_ladder.empty())
        throw ConfigError("eps and h ladders must be non-empty");
    for (double e : cfg.eps_ladder)
        if (!(e > 0.0) || e > 1.0) throw ConfigError("eps values must lie in (0,1]");
    for (double h : cfg.h_ladder) {
        if (!(h > 0.0)) throw ConfigError("h values must be positive");
        // admissibility of the joint scaling regime: h * eps^{a-1} <= 1
        for (double e : cfg.eps_ladder)
            if (h * std::pow(e, cfg.a - 1) > 1.0)
                throw ConfigError("h * eps^(a-1) <= 1 violated for h=" + format_g17(h) +
                                  ", eps=" + format_g17(e));
    }
    if (!(cfg.cell_tolerance > 0.0) || !(cfg.fine_tolerance > 0.0))
        throw ConfigError("solver tolerances must be positive");
    if (!(cfg.cutoff_cells > 0.0)) throw ConfigError("cutoff_cells must be positive");
    if (cfg.n_smoothing < 0) throw ConfigError("n_smoothing must be >= 0");
}

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.schema_version = j.value("schema_version", 1);

    if (j.contains("geometry")) {
        const auto& g = j.at("geometry");
        cfg.geometry.default_phase = g.value("default_phase", 0);
        cfg.geometry.void_phase = g.value("void_phase", -1);
        for (const auto& pj : g.value("primitives", nlohmann::json::array())) {
            PhasePrimitive p;
            const std::string kind = pj.at("kind").get<std::string>();
            p.phase = pj.at("phase").get<int>();
            if (kind == "box") {
                p.kind = PhasePrimitive::Kind::Box;
                for (int d = 0; d < 3; ++d) {
                    p.lo[d] = pj.at("lo").at(static_cast<size_t>(d)).get<double>();
                    p.hi[d] = pj.at("hi").at(static_cast<size_t>(d)).get<double>();
                }
            } else if (kind == "cylinder_z") {
                p.kind = PhasePrimitive::Kind::CylinderZ;
                p.c1 = pj.at("c1").get<double>();
                p.c2 = pj.at("c2").get<double>();
                p.r = pj.at("r").get<double>();
                p.z0 = pj.value("z0", -1.0);
                p.z1 = pj.value("z1", 1.0);
            } else if (kind == "slab") {
                p.kind = PhasePrimitive::Kind::Slab;
                p.z0 = pj.at("z0").get<double>();
                p.z1 = pj.at("z1").get<double>();
            } else {
                throw ConfigError("unknown primitive kind '" + kind + "'");
            }
            cfg.geometry.primitives.push_back(p);
        }
    }

    for (const auto& pj : j.value("phases", nlohmann::json::array())) {
        IsotropicPhase p;
        p.lambda = pj.at("lambda").get<double>();
        p.mu = pj.at("mu").get<double>();
        cfg.phases.push_back(p);
    }
    if (cfg.phases.empty()) cfg.phases.push_back(IsotropicPhase{2.0, 1.0});

    if (j.contains("cell_resolution"))
        for (int d = 0; d < 3; ++d)
            cfg.cell_resolution[d] = j.at("cell_resolution").at(static_cast<size_t>(d));

    if (j.contains("omega")) {
        const auto& o = j.at("omega");
        cfg.l1 = o.value("l1", 1.0);
        cfg.l2 = o.value("l2", 1.0);
        if (o.contains("clamped"))
            for (int d = 0; d < 4; ++d)
                cfg.clamped[static_cast<size_t>(d)] =
                    o.at("clamped").at(static_cast<size_t>(d)).get<bool>();
    }
    if (j.contains("plate")) {
        cfg.plate_nx = j.at("plate").value("nx", 16);
        cfg.plate_ny = j.at("plate").value("ny", 16);
    }
    if (j.contains("load"))
        for (int c = 0; c < 3; ++c) {
            const auto& lc = j.at("load").at(static_cast<size_t>(c));
            if (lc.is_number()) {
                cfg.load[static_cast<size_t>(c)] = {lc.get<double>(), 0.0, 0.0, 0.0};
            } else {
                for (size_t t = 0; t < 4; ++t)
                    cfg.load[static_cast<size_t>(c)][t] =
                        t < lc.size() ? lc.at(t).get<double>() : 0.0;
            }
        }
    cfg.a = j.value("a", 1);
    if (j.contains("eps_ladder"))
        cfg.eps_ladder = j.at("eps_ladder").get<std::vector<double>>();
    if (j.contains("h_ladder")) cfg.h_ladder = j.at("h_ladder").get<std::vector<double>>();
    if (j.contains("solver")) {
        cfg.cell_tolerance = j.at("solver").value("cell_tolerance", 1e-10);
        cfg.fine_tolerance = j.at("solver").value("fine_tolerance", 1e-12);
    }
    cfg.normalize_by_material = j.value("normalize_by_material", false);
    cfg.cutoff_cells = j.value("cutoff_cells", 2.0);
    cfg.n_smoothing = j.value("n_smoothing", 1);
    cfg.seed = j.value("seed", static_cast<uint64_t>(1234));

    validate_config(cfg);
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in '" + path + "': " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config schema error in '" + path + "': " + e.what());
    }
}

}  // namespace homplate
