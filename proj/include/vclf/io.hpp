#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "vclf/reaction.hpp"
#include "vclf/vclf_spec.hpp"

namespace vclf::io {

/// Parses a file with line/column context on syntax errors.
nlohmann::json load_json_file(const std::filesystem::path& path);

/// 64-bit FNV-1a of the raw file bytes, rendered as "fnv1a:<hex>".
std::string file_hash(const std::filesystem::path& path);

// -- monotone functions and gain matrices (schemas/gains.schema.json) --------

nlohmann::json to_json(const MonotoneFn& fn);
MonotoneFn monotone_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GainMatrix& gains);
GainMatrix gains_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CycleReport& report);

// -- feasibility instances ----------------------------------------------------

struct FeasibilityInstance {
    std::vector<AffineConstraint> constraints;
    ControlSet input;
};
FeasibilityInstance feasibility_from_json(const nlohmann::json& j);
ControlSet control_set_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeasibilityResult& result,
                       const std::vector<AffineConstraint>& constraints);

// -- verification problems (schemas/problem.schema.json) ----------------------

struct Problem {
    ControlAffineSystem sys;
    VRCLFSpec spec;
    SampleParams sampling;
};

/// base_dir resolves relative gain-matrix paths inside the document.
Problem problem_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

nlohmann::json to_json(const ImplicationReport& report);

// -- reaction networks (schemas/network.schema.json) ---------------------------

struct NetworkBundle {
    ReactionNetwork net;
    ConservationData cons;
    std::optional<Thm52Config> certificate;
};
NetworkBundle network_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ConditionReport& report);

// -- run manifests --------------------------------------------------------------

struct RunManifest {
    std::string config_hash;
    std::map<std::string, std::uint64_t> seeds;
    std::map<std::string, double> tolerances;
    double wall_time_s = 0.0;

    nlohmann::json to_json() const;
};

/// Component versions reported in every manifest.
const std::map<std::string, std::string>& module_versions();

}  // namespace vclf::io
