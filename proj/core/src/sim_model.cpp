#include "matef/sim_model.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "matef/rng.hpp"
#include "matef/util.hpp"

namespace matef {

namespace {

// Domain streams keep the intrinsic, failure and jitter draws independent.
constexpr std::uint64_t kIntrinsicStream = 0x494e5452;  // "INTR"
constexpr std::uint64_t kFailureStream = 0x4641494c;    // "FAIL"
constexpr std::uint64_t kJitterStream = 0x4a495454;     // "JITT"
constexpr std::uint64_t kVariableStream = 0x56415249;   // "VARI"

std::string hex32(std::uint64_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", static_cast<unsigned>(v & 0xffffffffu));
    return buf;
}

std::string make_label(ArtefactType t, Rng& rng) {
    switch (t) {
        case ArtefactType::File:
            return "C:\\Users\\victim\\AppData\\Local\\Temp\\tmp_" + hex32(rng.next_u64()) +
                   ".dat";
        case ArtefactType::Mutex: return "Global\\mx_" + hex32(rng.next_u64());
        case ArtefactType::Registry:
            return "HKCU\\Software\\" + hex32(rng.next_u64()) + "\\Run";
        case ArtefactType::Port: {
            static constexpr int common[] = {80, 443, 53, 8080, 1337, 6667, 25, 135, 139, 445};
            if (rng.unit() < 0.5) return std::to_string(common[rng.bounded(10)]);
            return std::to_string(1024 + rng.bounded(64512));
        }
        case ArtefactType::RPort: {
            static constexpr int common[] = {80, 443, 53, 25, 6667, 8443, 465, 587};
            if (rng.unit() < 0.6) return std::to_string(common[rng.bounded(8)]);
            return std::to_string(1024 + rng.bounded(64512));
        }
    }
    return "?";
}

// Event times skew early: t = saturation * u^2 puts ~half the activity
// in the first quarter of the window.
double draw_event_time(Rng& rng, double saturation_s) {
    const double u = rng.unit();
    return saturation_s * u * u;
}

void sort_events(std::vector<CanonicalEvent>& events) {
    std::sort(events.begin(), events.end(), [](const CanonicalEvent& a, const CanonicalEvent& b) {
        if (a.t_offset_s != b.t_offset_s) return a.t_offset_s < b.t_offset_s;
        if (a.type != b.type) return a.type < b.type;
        return a.label < b.label;
    });
}

}  // namespace

double SimModelParams::mean_for(ArtefactType t) const {
    switch (t) {
        case ArtefactType::File: return file_mean;
        case ArtefactType::Mutex: return mutex_mean;
        case ArtefactType::Registry: return registry_mean;
        case ArtefactType::Port: return port_mean;
        case ArtefactType::RPort: return rport_mean;
    }
    return 0.0;
}

std::vector<CanonicalEvent> intrinsic_events(const std::string& md5,
                                             const SimModelParams& params) {
    Rng rng(mix_seed(seed_from_md5(md5), kIntrinsicStream));
    std::vector<CanonicalEvent> events;
    for (ArtefactType t : kAllArtefactTypes) {
        // Cap keeps the distinct-label redraw loop clear of label-space
        // exhaustion under absurd configured means.
        const std::uint32_t target = std::min(rng.poisson(params.mean_for(t)), 10000u);
        std::set<std::string> labels;
        while (labels.size() < target) {
            // Redraw on collision so the distinct-label count equals the draw.
            labels.insert(make_label(t, rng));
        }
        for (const auto& label : labels)
            events.push_back({md5, t, label, draw_event_time(rng, params.saturation_s)});
    }
    sort_events(events);
    return events;
}

bool draws_execution_failure(const std::string& md5, std::uint64_t run_seed,
                             const SimModelParams& params) {
    if (params.failure_prob <= 0.0) return false;
    Rng rng(mix_seed(mix_seed(seed_from_md5(md5), run_seed), kFailureStream));
    return rng.unit() < params.failure_prob;
}

bool is_variable_binary(const std::string& md5, const SimModelParams& params) {
    if (params.variability_prob <= 0.0) return false;
    Rng rng(mix_seed(seed_from_md5(md5), kVariableStream));
    return rng.unit() < params.variability_prob;
}

std::vector<CanonicalEvent> simulate_execution_events(const std::string& md5,
                                                      std::int64_t duration_s,
                                                      std::uint64_t run_seed,
                                                      const SimModelParams& params,
                                                      const ToolProfile& tool) {
    std::vector<CanonicalEvent> events;
    const double horizon = static_cast<double>(duration_s);

    for (const auto& e : intrinsic_events(md5, params)) {
        if (e.t_offset_s > horizon) continue;
        if (!tool.covers(e.type)) continue;
        if (tool.efficiency < 1.0 &&
            stable_unit({tool.tool_id, md5, to_string(e.type), e.label}) >= tool.efficiency)
            continue;
        events.push_back(e);
    }

    if (is_variable_binary(md5, params)) {
        // Run-dependent noise stream. Times are drawn over the full activity
        // window and filtered by the horizon, which keeps counts monotone in
        // duration for a fixed run seed.
        Rng rng(mix_seed(mix_seed(seed_from_md5(md5), run_seed), kJitterStream));
        for (ArtefactType t : kAllArtefactTypes) {
            const std::uint32_t extra = rng.poisson(params.jitter_mean);
            for (std::uint32_t i = 0; i < extra; ++i) {
                CanonicalEvent e;
                e.md5 = md5;
                e.type = t;
                e.label = "noise_" + hex32(rng.next_u64());
                e.t_offset_s = draw_event_time(rng, params.saturation_s);
                if (e.t_offset_s > horizon) continue;
                if (!tool.covers(t)) continue;
                events.push_back(std::move(e));
            }
        }
    }

    sort_events(events);
    return events;
}

std::vector<std::byte> simulate_execution(const std::string& md5, std::int64_t duration_s,
                                          std::uint64_t run_seed, const SimModelParams& params,
                                          const ToolProfile& tool) {
    const std::string jsonl =
        events_to_jsonl(simulate_execution_events(md5, duration_s, run_seed, params, tool));
    const auto span = as_bytes(jsonl);
    return {span.begin(), span.end()};
}

}  // namespace matef
