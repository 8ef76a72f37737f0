#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matef/artefact_types.hpp"
#include "matef/events.hpp"

namespace matef {

/// Generative model for the simulated sandbox. All parameters are explicit and
/// every draw is seeded, so a run is a pure function of its inputs.
struct SimModelParams {
    // Mean saturated artefact count per type (Poisson).
    double file_mean = 12.0;
    double mutex_mean = 4.0;
    double registry_mean = 8.0;
    double port_mean = 5.0;
    double rport_mean = 3.0;

    /// Activity window: every intrinsic event lands in [0, saturation_s], so
    /// counts stop growing past it. Event times are skewed early (u^2 law).
    double saturation_s = 240.0;

    /// Per-run probability that a binary fails to execute.
    double failure_prob = 0.15;
    /// Per-binary probability of being repeat-variable (extra run-dependent
    /// noise events on top of the intrinsic stream).
    double variability_prob = 0.2;
    /// Mean extra events per type and run for variable binaries.
    double jitter_mean = 2.0;

    /// Fixed virtual-clock cost per binary beyond the execution window
    /// (file preparation, revert, log capture).
    double overhead_s = 600.0;

    double mean_for(ArtefactType t) const;
};

/// What a simulated tool captures: a type-coverage mask plus a per-event
/// detection efficiency in (0,1]. Efficiency draws are intrinsic to
/// (tool, binary, event), so capture is repeatable across runs.
struct ToolProfile {
    std::string tool_id = "canonical";
    double efficiency = 1.0;
    std::uint8_t coverage_mask = 0x1f;  // all five types

    bool covers(ArtefactType t) const {
        return coverage_mask & (1u << static_cast<unsigned>(t));
    }
};

/// The binary's full (saturated) intrinsic event stream: a pure function of
/// (md5, model). This is the model's ground truth, used both by the simulated
/// guest and by the synthetic-oracle generator.
std::vector<CanonicalEvent> intrinsic_events(const std::string& md5, const SimModelParams& params);

/// Per-run execution-failure draw: pure function of (md5, run_seed, params).
bool draws_execution_failure(const std::string& md5, std::uint64_t run_seed,
                             const SimModelParams& params);

/// True when the binary is repeat-variable under this model (intrinsic draw).
bool is_variable_binary(const std::string& md5, const SimModelParams& params);

/// The tool's event log for one simulated execution: intrinsic events within
/// [0, duration_s] that the tool captures, plus (for variable binaries)
/// run-seeded jitter events, serialized in a deterministic order. Event counts
/// per type are non-decreasing in duration_s for fixed (md5, run_seed).
std::vector<CanonicalEvent> simulate_execution_events(const std::string& md5,
                                                      std::int64_t duration_s,
                                                      std::uint64_t run_seed,
                                                      const SimModelParams& params,
                                                      const ToolProfile& tool);

/// Canonical JSONL bytes of simulate_execution_events.
std::vector<std::byte> simulate_execution(const std::string& md5, std::int64_t duration_s,
                                          std::uint64_t run_seed, const SimModelParams& params,
                                          const ToolProfile& tool);

}  // namespace matef
