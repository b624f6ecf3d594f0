#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "exfilpath/agents.hpp"

namespace exfil {

struct ExfilPath {
    std::vector<Address> hosts;  // initial first, exit last
    Address exit;
    int steps = 0;               // actions in the extraction episode, scans and failures included
    double total_reward = 0.0;
    double cumulative_path_score = 0.0;

    bool operator==(const ExfilPath&) const = default;
};

struct RankResult {
    int rank = 0;
    ExfilPath path;
    bool converged = false;      // extraction episode reached the goal
    bool failed = false;
    std::string failure;
    std::uint64_t seed = 0;      // per-rank training seed
    int episodes_run = 0;
    WindowStats final_window;
    TrainingLog log;             // training log of this rank's run
};

struct EPRLReport {
    std::string scenario_id;
    AgentKind agent = AgentKind::a2c;
    double scale_factor = 1.0;
    std::uint64_t seed = 0;
    std::vector<RankResult> ranks;
    int training_runs = 0;  // exactly one per rank attempted
    bool failed = false;
};

struct PlannerOptions {
    int greedy_attempts = 10;  // reseeded greedy rollouts before declaring failure
};

// Algorithm: train on the MDP with the current exit set, extract the
// optimal path, remove its exit, repeat n times.
EPRLReport discover_top_n(const NetworkScenario& scenario, const RewardModel& reward_model,
                          AgentKind agent_kind, const AgentConfig& config, int n,
                          PlannerOptions options = {});

// Initial host followed by hosts in order of first compromise, ending at
// the exit that reached root. Throws if the episode did not reach the goal.
ExfilPath extract_path(const EpisodeRecord& episode, const NetworkScenario& scenario);

std::string render_report_text(const EPRLReport& report);
nlohmann::json render_report_json(const EPRLReport& report);
EPRLReport parse_report_json(const nlohmann::json& doc);

}  // namespace exfil
