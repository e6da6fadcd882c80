#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lvc/common.hpp"

namespace lvc {

// Decode-pipeline model: named stages bound to exclusive resources, with
// intra-frame dependencies and cross-frame dependencies on the previous
// timestep. The number of frames in flight is whatever the edges allow.
struct PipelineStage {
    std::string name;
    std::string resource;
    double duration_ms = 0.0;
};

struct PipelineSpec {
    std::vector<PipelineStage> stages;
    std::vector<std::pair<int, int>> deps;        // (stage, prerequisite), same frame
    std::vector<std::pair<int, int>> cross_deps;  // (stage, prerequisite in frame t-1)
    int frames = 1;

    int stage_index(const std::string& name) const {
        for (size_t i = 0; i < stages.size(); ++i)
            if (stages[i].name == name) return int(i);
        fail("pipeline_sim", "unknown stage '" + name + "'");
    }

    void validate() const {
        if (stages.empty()) fail("pipeline_sim", "spec declares no stages");
        if (frames < 1) fail("pipeline_sim", "frame count must be >= 1");
        for (const PipelineStage& s : stages)
            if (!(s.duration_ms > 0.0))
                fail("pipeline_sim", "stage '" + s.name + "' must have a positive duration");
        for (size_t i = 0; i < stages.size(); ++i)
            for (size_t j = i + 1; j < stages.size(); ++j)
                if (stages[i].name == stages[j].name)
                    fail("pipeline_sim", "duplicate stage name '" + stages[i].name + "'");
        // Intra-frame edges must be acyclic (Kahn's algorithm).
        std::vector<int> indegree(stages.size(), 0);
        for (const auto& [s, d] : deps) ++indegree[size_t(s)];
        std::vector<int> queue;
        for (size_t i = 0; i < stages.size(); ++i)
            if (indegree[i] == 0) queue.push_back(int(i));
        size_t seen = 0;
        while (seen < queue.size()) {
            const int u = queue[seen++];
            for (const auto& [s, d] : deps)
                if (d == u && --indegree[size_t(s)] == 0) queue.push_back(s);
        }
        if (seen != stages.size())
            fail("pipeline_sim", "intra-frame dependency cycle detected");
    }
};

struct ScheduledStage {
    int frame = 0;
    int stage = 0;
    double start_ms = 0.0;
    double end_ms = 0.0;
};

struct SimulationResult {
    std::vector<ScheduledStage> schedule;  // ordered by dispatch
    double steady_state_fps = 0.0;
    double makespan_ms = 0.0;
    std::map<std::string, double> utilization;  // busy time / makespan per resource
    std::vector<double> frame_completion_ms;
};

// List scheduling: a stage instance starts when its dependencies have
// finished and its resource is free; ties break on frame index, then stage
// declaration order. Steady-state FPS comes from the average completion gap
// over the last half of the frames.
inline SimulationResult simulate(const PipelineSpec& spec) {
    spec.validate();
    const int S = int(spec.stages.size());
    const int F = spec.frames;
    const int total = S * F;

    std::vector<double> end_time(size_t(total), -1.0);
    std::vector<bool> scheduled(size_t(total), false);
    std::map<std::string, double> resource_free;
    std::map<std::string, double> resource_busy;
    for (const PipelineStage& s : spec.stages) {
        resource_free[s.resource] = 0.0;
        resource_busy[s.resource] = 0.0;
    }

    auto id = [S](int frame, int stage) { return frame * S + stage; };

    SimulationResult result;
    result.schedule.reserve(size_t(total));

    for (int done = 0; done < total; ++done) {
        int best = -1;
        double best_start = 0.0;
        for (int f = 0; f < F; ++f)
            for (int s = 0; s < S; ++s) {
                const int inst = id(f, s);
                if (scheduled[size_t(inst)]) continue;
                double ready = 0.0;
                bool deps_done = true;
                for (const auto& [stage, pre] : spec.deps) {
                    if (stage != s) continue;
                    const int p = id(f, pre);
                    if (!scheduled[size_t(p)]) {
                        deps_done = false;
                        break;
                    }
                    ready = std::max(ready, end_time[size_t(p)]);
                }
                if (deps_done && f > 0)
                    for (const auto& [stage, pre] : spec.cross_deps) {
                        if (stage != s) continue;
                        const int p = id(f - 1, pre);
                        if (!scheduled[size_t(p)]) {
                            deps_done = false;
                            break;
                        }
                        ready = std::max(ready, end_time[size_t(p)]);
                    }
                if (!deps_done) continue;
                const double start =
                    std::max(ready, resource_free[spec.stages[size_t(s)].resource]);
                if (best < 0 || start < best_start) {
                    best = inst;
                    best_start = start;
                }
                // Equal start times: the scan order (frame, then declaration
                // order) already visits the preferred instance first.
            }
        const int f = best / S, s = best % S;
        const PipelineStage& st = spec.stages[size_t(s)];
        const double end = best_start + st.duration_ms;
        scheduled[size_t(best)] = true;
        end_time[size_t(best)] = end;
        resource_free[st.resource] = end;
        resource_busy[st.resource] += st.duration_ms;
        result.schedule.push_back({f, s, best_start, end});
    }

    result.frame_completion_ms.assign(size_t(F), 0.0);
    for (int f = 0; f < F; ++f)
        for (int s = 0; s < S; ++s)
            result.frame_completion_ms[size_t(f)] =
                std::max(result.frame_completion_ms[size_t(f)], end_time[size_t(id(f, s))]);
    result.makespan_ms = result.frame_completion_ms.back();
    for (auto& [res, busy] : resource_busy)
        result.utilization[res] = result.makespan_ms > 0 ? busy / result.makespan_ms : 0.0;

    const int window = (F + 1) / 2;
    if (window >= 2) {
        const double span = result.frame_completion_ms[size_t(F - 1)] -
                            result.frame_completion_ms[size_t(F - window)];
        result.steady_state_fps =
            span > 0 ? 1000.0 / (span / double(window - 1)) : std::numeric_limits<double>::infinity();
    } else {
        result.steady_state_fps = 1000.0 / result.frame_completion_ms[size_t(F - 1)];
    }
    return result;
}

// Plain-text spec format, one directive per line:
//   frames <count>
//   stage <name> <resource> <duration_ms>
//   dep <stage> <prerequisite>       same-frame dependency
//   xdep <stage> <prerequisite>      dependency on the previous frame
// '#' starts a comment.
inline PipelineSpec parse_pipeline_spec(const std::string& text) {
    PipelineSpec spec;
    spec.frames = 0;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::array<std::string, 3>> pending_deps;  // kind, stage, pre
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;
        auto bad = [&](const std::string& why) {
            fail("pipeline_sim", "line " + std::to_string(lineno) + ": " + why);
        };
        if (word == "frames") {
            if (!(ls >> spec.frames) || spec.frames < 1) bad("frames needs a positive count");
        } else if (word == "stage") {
            PipelineStage s;
            if (!(ls >> s.name >> s.resource >> s.duration_ms))
                bad("stage needs <name> <resource> <duration_ms>");
            spec.stages.push_back(std::move(s));
        } else if (word == "dep" || word == "xdep") {
            std::string stage, pre;
            if (!(ls >> stage >> pre)) bad(word + " needs <stage> <prerequisite>");
            pending_deps.push_back({word, stage, pre});
        } else {
            bad("unknown directive '" + word + "'");
        }
        std::string extra;
        if (ls >> extra) bad("trailing token '" + extra + "'");
    }
    if (spec.frames == 0) spec.frames = 32;
    for (const auto& [kind, stage, pre] : pending_deps) {
        const int s = spec.stage_index(stage);
        const int p = spec.stage_index(pre);
        if (kind == "dep")
            spec.deps.emplace_back(s, p);
        else
            spec.cross_deps.emplace_back(s, p);
    }
    spec.validate();
    return spec;
}

// Runs each named spec and reports one CSV row per variant.
struct FpsReportRow {
    std::string name;
    double fps = 0.0;
    double makespan_ms = 0.0;
};

inline std::vector<FpsReportRow> fps_report(
    const std::vector<std::pair<std::string, PipelineSpec>>& variants) {
    std::vector<FpsReportRow> rows;
    rows.reserve(variants.size());
    for (const auto& [name, spec] : variants) {
        const SimulationResult r = simulate(spec);
        rows.push_back({name, r.steady_state_fps, r.makespan_ms});
    }
    return rows;
}

}  // namespace lvc
