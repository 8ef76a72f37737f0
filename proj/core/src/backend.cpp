#include "matef/backend.hpp"

#include "matef/errors.hpp"
#include "matef/orchestrator.hpp"
#include "matef/rng.hpp"

namespace matef {

/// Simulated guest. Tracks its position on the virtual timeline; the concrete
/// artefact log comes from the generative model.
class SimGuestSession final : public GuestSession {
public:
    SimGuestSession(SimulatedBackend& backend, int guest_index)
        : backend_(backend), guest_index_(guest_index) {
        clock_s_ = static_cast<double>(guest_index) * static_cast<double>(backend.stagger_s_);
    }

    void revert_to_clean() override {
        check_fault();
        // Snapshot restore: state-equivalent to the initial image.
        current_.reset();
        log_.clear();
        clock_s_ += backend_.params_.overhead_s * 0.5;
    }

    void copy_in(const ToolPackage& tool, const BinaryRef& binary) override {
        check_fault();
        if (tool.tool_id != backend_.tool_.tool_id)
            throw BackendError("sim guest: tool package '" + tool.tool_id +
                               "' does not match provisioned tool '" + backend_.tool_.tool_id +
                               "'");
        current_ = binary.md5;
        clock_s_ += backend_.params_.overhead_s * 0.25;
    }

    ExecutionOutcome execute_for(std::int64_t duration_s) override {
        check_fault();
        if (!current_) throw BackendError("sim guest: execute_for before copy_in");
        const double start = clock_s_;
        clock_s_ += static_cast<double>(duration_s);
        ExecutionOutcome outcome;
        if (draws_execution_failure(*current_, backend_.run_seed_, backend_.params_)) {
            outcome.executed_ok = false;
            outcome.failure_reason = "binary did not execute";
            log_.clear();
        } else {
            outcome.executed_ok = true;
            log_ = simulate_execution(*current_, duration_s, backend_.run_seed_, backend_.params_,
                                      backend_.tool_);
        }
        backend_.record({guest_index_, *current_, start, clock_s_});
        return outcome;
    }

    std::vector<std::byte> collect_log() override {
        check_fault();
        clock_s_ += backend_.params_.overhead_s * 0.25;
        ++completed_;
        return std::move(log_);
    }

    void shutdown() override { current_.reset(); }

private:
    void check_fault() {
        const auto& fault = backend_.induced_fault_;
        if (fault && fault->first == guest_index_ && completed_ >= fault->second)
            throw BackendError("sim guest " + std::to_string(guest_index_) +
                               ": induced backend fault");
    }

    SimulatedBackend& backend_;
    int guest_index_;
    double clock_s_ = 0.0;
    int completed_ = 0;
    std::optional<std::string> current_;
    std::vector<std::byte> log_;
};

SimulatedBackend::SimulatedBackend(SimModelParams params, ToolProfile tool)
    : params_(params), tool_(std::move(tool)) {}

void SimulatedBackend::begin_run(const TestRunSpec& spec) {
    run_seed_ = spec.seed;
    stagger_s_ = spec.stagger_s;
    schedule_.clear();
}

std::unique_ptr<GuestSession> SimulatedBackend::provision(int guest_index) {
    return std::make_unique<SimGuestSession>(*this, guest_index);
}

void SimulatedBackend::induce_guest_fault(int guest_index, int fail_after) {
    induced_fault_ = {guest_index, fail_after};
}

void SimulatedBackend::record(const ScheduleEntry& entry) {
    std::lock_guard<std::mutex> lock(schedule_mutex_);
    schedule_.push_back(entry);
}

std::vector<ScheduleEntry> SimulatedBackend::schedule() const {
    std::lock_guard<std::mutex> lock(schedule_mutex_);
    return schedule_;
}

void HypervisorBackend::begin_run(const TestRunSpec&) {
    throw BackendError(
        "hypervisor backend is an unimplemented extension point; use backend = sim");
}

std::unique_ptr<GuestSession> HypervisorBackend::provision(int) {
    throw BackendError(
        "hypervisor backend is an unimplemented extension point; use backend = sim");
}

}  // namespace matef
