#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "matef/sim_model.hpp"

namespace matef {

struct TestRunSpec;  // orchestrator.hpp

struct ToolPackage {
    std::string tool_id;
};

struct BinaryRef {
    std::string md5;
    std::vector<std::byte> content;  // unused by the simulated backend
};

struct ExecutionOutcome {
    bool executed_ok = false;
    std::string failure_reason;
};

/// One guest's lifecycle: revert to the clean snapshot, copy the tool and a
/// binary in, execute for the window, collect the tool's log, shut down.
class GuestSession {
public:
    virtual ~GuestSession() = default;
    virtual void revert_to_clean() = 0;
    virtual void copy_in(const ToolPackage& tool, const BinaryRef& binary) = 0;
    virtual ExecutionOutcome execute_for(std::int64_t duration_s) = 0;
    virtual std::vector<std::byte> collect_log() = 0;
    virtual void shutdown() = 0;
};

/// Pluggable execution backend; safe for concurrent use across distinct guest
/// indices.
class GuestBackend {
public:
    virtual ~GuestBackend() = default;
    virtual std::string name() const = 0;
    /// Called once per test run before any guest is provisioned.
    virtual void begin_run(const TestRunSpec& /*spec*/) {}
    virtual std::unique_ptr<GuestSession> provision(int guest_index) = 0;
};

/// One (guest, binary) slot on the simulated backend's virtual timeline.
struct ScheduleEntry {
    int guest_index = 0;
    std::string md5;
    double start_s = 0.0;  // virtual seconds from run start
    double end_s = 0.0;
};

/// Deterministic simulated sandbox. Guests live on per-guest virtual clocks
/// (guest i starts at i * stagger_s); each binary costs overhead_s + duration
/// of virtual time and no wall-clock time. Logs come from the seeded
/// generative model, so a run is a pure function of (sample, spec, model).
/// In-guest sequencing: the tool is in place before the binary launches, and
/// both stop when the execution window expires.
class SimulatedBackend final : public GuestBackend {
public:
    SimulatedBackend(SimModelParams params, ToolProfile tool);

    std::string name() const override { return "sim"; }
    void begin_run(const TestRunSpec& spec) override;
    std::unique_ptr<GuestSession> provision(int guest_index) override;

    /// Test hook: sessions for guest_index start failing with a backend fault
    /// after completing fail_after binaries.
    void induce_guest_fault(int guest_index, int fail_after);

    /// Virtual-time schedule recorded during the last begun run.
    std::vector<ScheduleEntry> schedule() const;

    const SimModelParams& params() const { return params_; }
    const ToolProfile& tool() const { return tool_; }

private:
    friend class SimGuestSession;
    void record(const ScheduleEntry& entry);

    SimModelParams params_;
    ToolProfile tool_;
    std::uint64_t run_seed_ = 0;
    std::int64_t stagger_s_ = 10;
    std::optional<std::pair<int, int>> induced_fault_;
    mutable std::mutex schedule_mutex_;
    std::vector<ScheduleEntry> schedule_;
};

/// Extension point for a real hypervisor driver. Not implemented in this
/// build: every operation reports the backend as unsupported. begin_run
/// throws, so a run aborts as backend-unavailable instead of recording a
/// fleet of guest faults.
class HypervisorBackend final : public GuestBackend {
public:
    std::string name() const override { return "hypervisor"; }
    void begin_run(const TestRunSpec& spec) override;
    std::unique_ptr<GuestSession> provision(int guest_index) override;
};

}  // namespace matef
