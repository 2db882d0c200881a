#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tmac/harness.hpp"
#include "tmac/solver.hpp"
#include "tmac/synth.hpp"

namespace tmac {

/// Everything a CLI run can be configured with. Sections:
///   solver   SolverConfig fields (per-mode entries as a scalar or a list)
///   synth    SynthSpec: dims, rank, family, sr, sigma, seed
///   grid     ranks, srs, trials, success_relerr
///   methods  list of "kind" strings or {"kind", "label", "alphas"} objects
///   seed     base seed of phase-transition runs
///   threads  worker pool size
/// Unknown keys anywhere are rejected.
struct RunConfig {
    SolverConfig solver;
    SynthSpec synth;
    GridAxes grid = desk_axes();
    double success_relerr = 1e-2;
    std::vector<MethodVariant> methods{MethodVariant::of(MethodKind::TmacFix),
                                       MethodVariant::of(MethodKind::MatComp)};
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// Throws InputError on malformed JSON, wrong types, bad values or unknown keys.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig parse_run_config_text(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

SolverConfig parse_solver_config(const nlohmann::json& j, SolverConfig base = {});
SynthSpec parse_synth_spec(const nlohmann::json& j, SynthSpec base = {});

nlohmann::json to_json(const SynthSpec& spec);
nlohmann::json to_json(const SolverConfig& cfg);

}  // namespace tmac
