#include "exfilpath/planner.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace exfil {

using nlohmann::json;

namespace {

constexpr std::uint64_t kRankStream = 0x72616e6b;     // per-rank training seed
constexpr std::uint64_t kRolloutStream = 0x726f6c6c;  // extraction rollouts

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

ExfilPath extract_path(const EpisodeRecord& episode, const NetworkScenario& scenario) {
    if (!episode.goal_reached || !episode.goal_exit)
        throw std::invalid_argument("extract_path requires an episode that reached the goal");
    ExfilPath path;
    path.exit = *episode.goal_exit;
    path.hosts.push_back(scenario.initial_host);
    for (const Address& a : episode.compromised_order)
        if (!(a == *episode.goal_exit)) path.hosts.push_back(a);
    path.hosts.push_back(*episode.goal_exit);
    path.steps = episode.steps;
    path.total_reward = episode.total_reward;
    path.cumulative_path_score = 0.0;
    for (size_t i = 1; i < path.hosts.size(); ++i) {
        const HostConfig* h = scenario.find_host(path.hosts[i]);
        if (h) path.cumulative_path_score += h->path_score;
    }
    return path;
}

EPRLReport discover_top_n(const NetworkScenario& scenario, const RewardModel& reward_model,
                          AgentKind agent_kind, const AgentConfig& config, int n,
                          PlannerOptions options) {
    const int exit_count = static_cast<int>(scenario.exit_hosts.size());
    if (n < 1 || n > exit_count)
        throw std::invalid_argument("n must lie in [1, number of exit hosts]");

    EPRLReport report;
    report.scenario_id = scenario.id;
    report.agent = agent_kind;
    report.scale_factor = reward_model.scale_factor;
    report.seed = config.seed;

    auto scenario_ptr = std::make_shared<const NetworkScenario>(scenario);
    std::vector<Address> exit_set = scenario.exit_hosts;

    for (int rank = 1; rank <= n; ++rank) {
        RankResult rr;
        rr.rank = rank;
        rr.seed = mix_seed(config.seed, kRankStream + static_cast<std::uint64_t>(rank));
        AgentConfig rank_config = config;
        rank_config.seed = rr.seed;

        Env env(scenario_ptr, reward_model, rr.seed);
        env.set_exit_hosts(exit_set);
        // Fresh agent per iteration; no warm start across exit-set changes.
        Agent agent = make_agent(agent_kind, scenario, rank_config);
        rr.log = train(agent, env, rank_config);
        ++report.training_runs;
        rr.episodes_run = static_cast<int>(rr.log.rows.size());
        rr.final_window = window_stats(rr.log, rr.episodes_run,
                                       std::min(rank_config.convergence_window,
                                                rr.episodes_run));

        EpisodeRecord episode;
        for (int attempt = 0; attempt < options.greedy_attempts; ++attempt) {
            env.reset(mix_seed(rr.seed, kRolloutStream + static_cast<std::uint64_t>(attempt)));
            episode = greedy_rollout(agent, env, rank_config.max_steps, rank_config.gamma);
            if (episode.goal_reached) break;
        }
        if (!episode.goal_reached) {
            rr.failed = true;
            rr.failure = "training did not produce a goal-reaching greedy episode";
            report.ranks.push_back(std::move(rr));
            report.failed = true;
            break;
        }
        rr.converged = true;
        rr.path = extract_path(episode, scenario);
        exit_set.erase(std::remove(exit_set.begin(), exit_set.end(), rr.path.exit),
                       exit_set.end());
        report.ranks.push_back(std::move(rr));
    }
    return report;
}

namespace {

std::string path_cell(const ExfilPath& path) {
    std::string out;
    for (size_t i = 0; i < path.hosts.size(); ++i) {
        if (i) out += " -> ";
        out += to_string(path.hosts[i]);
    }
    return out;
}

std::string format_number(double v) {
    std::ostringstream oss;
    oss << std::setprecision(12) << v;
    return oss.str();
}

}  // namespace

std::string render_report_text(const EPRLReport& report) {
    std::vector<std::array<std::string, 6>> rows;
    rows.push_back({"Rank", "Scale Factor", "Path", "Steps", "Reward", "Cumulative Score"});
    for (const RankResult& rr : report.ranks) {
        if (rr.failed) {
            rows.push_back({std::to_string(rr.rank), format_number(report.scale_factor),
                            "(failed: " + rr.failure + ")", "-", "-", "-"});
            continue;
        }
        rows.push_back({std::to_string(rr.rank), format_number(report.scale_factor),
                        path_cell(rr.path), std::to_string(rr.path.steps),
                        format_number(rr.path.total_reward),
                        format_number(rr.path.cumulative_path_score)});
    }
    std::array<size_t, 6> width{};
    for (const auto& row : rows)
        for (size_t c = 0; c < 6; ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream oss;
    for (size_t r = 0; r < rows.size(); ++r) {
        for (size_t c = 0; c < 6; ++c) {
            oss << std::left << std::setw(static_cast<int>(width[c])) << rows[r][c];
            if (c + 1 < 6) oss << "  ";
        }
        oss << '\n';
        if (r == 0) {
            for (size_t c = 0; c < 6; ++c) {
                oss << std::string(width[c], '-');
                if (c + 1 < 6) oss << "  ";
            }
            oss << '\n';
        }
    }
    return oss.str();
}

namespace {

json address_json(const Address& a) { return {{"subnet", a.subnet}, {"id", a.host}}; }

Address address_from_json(const json& j) {
    return {j.at("subnet").get<int>(), j.at("id").get<int>()};
}

}  // namespace

json render_report_json(const EPRLReport& report) {
    json doc;
    doc["scenario_id"] = report.scenario_id;
    doc["agent"] = std::string(to_string(report.agent));
    doc["scale_factor"] = report.scale_factor;
    doc["seed"] = report.seed;
    doc["failed"] = report.failed;
    doc["training_runs"] = report.training_runs;
    doc["paths"] = json::array();
    for (const RankResult& rr : report.ranks) {
        json entry;
        entry["rank"] = rr.rank;
        entry["converged"] = rr.converged;
        entry["seed"] = rr.seed;
        entry["episodes_run"] = rr.episodes_run;
        if (rr.failed) {
            entry["failure"] = rr.failure;
        } else {
            entry["exit"] = address_json(rr.path.exit);
            entry["hosts"] = json::array();
            for (const Address& a : rr.path.hosts) entry["hosts"].push_back(address_json(a));
            entry["steps"] = rr.path.steps;
            entry["total_reward"] = rr.path.total_reward;
            entry["cumulative_path_score"] = rr.path.cumulative_path_score;
        }
        doc["paths"].push_back(std::move(entry));
    }
    return doc;
}

EPRLReport parse_report_json(const json& doc) {
    EPRLReport report;
    report.scenario_id = doc.at("scenario_id").get<std::string>();
    auto kind = parse_agent_kind(doc.at("agent").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown agent kind in report");
    report.agent = *kind;
    report.scale_factor = doc.at("scale_factor").get<double>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.failed = doc.value("failed", false);
    report.training_runs = doc.value("training_runs", 0);
    for (const json& entry : doc.at("paths")) {
        RankResult rr;
        rr.rank = entry.at("rank").get<int>();
        rr.converged = entry.value("converged", false);
        rr.seed = entry.value("seed", std::uint64_t{0});
        rr.episodes_run = entry.value("episodes_run", 0);
        if (entry.contains("failure")) {
            rr.failed = true;
            rr.failure = entry.at("failure").get<std::string>();
        } else {
            rr.path.exit = address_from_json(entry.at("exit"));
            for (const json& h : entry.at("hosts"))
                rr.path.hosts.push_back(address_from_json(h));
            rr.path.steps = entry.at("steps").get<int>();
            rr.path.total_reward = entry.at("total_reward").get<double>();
            rr.path.cumulative_path_score = entry.at("cumulative_path_score").get<double>();
        }
        report.ranks.push_back(std::move(rr));
    }
    return report;
}

}  // namespace exfil
