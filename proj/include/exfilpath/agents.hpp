#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "exfilpath/env.hpp"
#include "exfilpath/nets.hpp"

namespace exfil {

struct AgentConfig {
    double learning_rate = 0.001;
    double gamma = 0.99;
    int episodes = 4000;
    int max_steps = 3000;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    double entropy_coef = 0.0;  // off unless configured
    double grad_clip = 0.0;     // global-norm clip; 0 disables
    // Optional early stop once the trailing window is converged
    // (goal rate above the threshold and mean steps below the cap).
    bool stop_when_converged = false;
    int convergence_window = 100;
    double convergence_goal_rate = 0.9;
    double convergence_max_steps = 300.0;
};

// One decision point of a collected episode. The net inputs are binary, so
// states and candidate encodings are stored as set-bit index lists.
struct TrajectoryStep {
    std::vector<int> state_bits;    // set bits of the shared (state) part
    std::vector<int> cand_offsets;  // size = candidates + 1, into cand_bits
    std::vector<int> cand_bits;     // candidate encodings, offset past the state
    int chosen = 0;
    double reward = 0.0;
    double value_estimate = 0.0;
    double log_prob = 0.0;
    double return_to_go = 0.0;  // R_t
    double advantage = 0.0;     // A_t = R_t - V(s_t)

    int candidate_count() const { return static_cast<int>(cand_offsets.size()) - 1; }
    std::span<const int> candidate(int i) const {
        return {cand_bits.data() + cand_offsets[i],
                static_cast<size_t>(cand_offsets[i + 1] - cand_offsets[i])};
    }
};

using Trajectory = std::vector<TrajectoryStep>;

// R_t by backward recursion and A_t = R_t - V(s_t).
void compute_returns_and_advantages(Trajectory& trajectory, double gamma,
                                    double terminal_value);

struct LossReport {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    bool skipped = false;  // non-finite gradient
};

// Candidate-scoring actor plus state-value critic with per-net Adam.
// Both agents below are built out of these.
class ActorCritic {
public:
    ActorCritic(int shared_dim, int cand_dim, std::vector<int> actor_hidden,
                std::vector<int> critic_hidden, const AgentConfig& config,
                std::mt19937_64& init_rng);

    void scores(std::span<const int> shared_bits, const TrajectoryStep& step,
                std::vector<double>& out) const;
    double score_one(std::span<const int> shared_bits, std::span<const int> cand_bits) const;
    double value(std::span<const int> state_bits) const;

    LossReport update(const Trajectory& trajectory);

    // Objectives and analytic gradients over a fixed trajectory; the
    // advantage and return fields are treated as constants.
    double actor_objective(const Trajectory& trajectory) const;
    double critic_objective(const Trajectory& trajectory) const;
    void gradients(const Trajectory& trajectory, MLPGrads& actor_out, MLPGrads& critic_out,
                   double* actor_loss = nullptr, double* critic_loss = nullptr) const;

    MLP& actor() { return actor_; }
    const MLP& actor() const { return actor_; }
    MLP& critic() { return critic_; }
    const MLP& critic() const { return critic_; }

private:
    MLP actor_;
    MLP critic_;
    AdamOptimizer actor_opt_;
    AdamOptimizer critic_opt_;
    double entropy_coef_;
    double grad_clip_;
};

struct EpisodeLogRow {
    int episode = 0;
    double total_reward = 0.0;
    int steps = 0;
    bool goal_reached = false;
};

struct TrainingLog {
    std::vector<EpisodeLogRow> rows;
};

// Trailing-window statistics over the last `window` rows ending at `end`.
struct WindowStats {
    double mean_reward = 0.0;
    double mean_steps = 0.0;
    double goal_rate = 0.0;
};
WindowStats window_stats(const TrainingLog& log, int end, int window);

struct EpisodeRecord {
    std::vector<Action> actions;
    std::vector<double> rewards;
    std::vector<Address> compromised_order;  // hosts in order of first compromise
    std::optional<Address> goal_exit;
    double total_reward = 0.0;
    double discounted_return = 0.0;
    int steps = 0;
    bool goal_reached = false;
};

class A2CAgent {
public:
    A2CAgent(const NetworkScenario& scenario, const AgentConfig& config);

    std::vector<double> policy_distribution(const EnvState& state,
                                            std::span<const Action> candidates) const;
    double value_estimate(const EnvState& state) const;

    // Samples one episode; fills everything update() needs.
    Trajectory collect_episode(Env& env, std::mt19937_64& policy_rng);
    LossReport update(Trajectory& trajectory);

    // Greedy candidate choice (argmax probability, lowest index on ties).
    int greedy_choice(const EnvState& state, std::span<const Action> candidates) const;

    ActorCritic& core() { return core_; }
    const ActorCritic& core() const { return core_; }
    const AgentConfig& config() const { return config_; }
    const EncodingLayout& layout() const { return layout_; }

    void state_bits(const EnvState& state, std::vector<int>& out) const;
    void candidate_step(const EnvState& state, std::span<const Action> candidates,
                        TrajectoryStep& step) const;

private:
    AgentConfig config_;
    EncodingLayout layout_;
    ActorCritic core_;
    std::vector<std::vector<int>> host_static_bits_;  // per host, within-host static bits
};

// Two cooperating A2C agents: one picks the target host from the full
// state, the other picks the action on that host from its sub-vector.
class DoubleAgent {
public:
    DoubleAgent(const NetworkScenario& scenario, const AgentConfig& config);

    Trajectory collect_episode(Env& env, std::mt19937_64& policy_rng);
    LossReport update(Trajectory& trajectory);

    int greedy_choice(const EnvState& state, std::span<const Action> candidates) const;
    std::vector<double> policy_distribution(const EnvState& state,
                                            std::span<const Action> candidates) const;

    ActorCritic& structuring() { return structuring_; }
    const ActorCritic& structuring() const { return structuring_; }
    ActorCritic& exploiting() { return exploiting_; }
    const ActorCritic& exploiting() const { return exploiting_; }
    const AgentConfig& config() const { return config_; }

private:
    struct HostChoice;
    void split_candidates(const EnvState& state, std::span<const Action> candidates,
                          std::vector<HostChoice>& hosts) const;
    void structuring_step(const EnvState& state, const std::vector<HostChoice>& hosts,
                          TrajectoryStep& out) const;
    void exploiting_step(const EnvState& state, const HostChoice& host,
                         std::span<const Action> candidates, TrajectoryStep& out) const;

    AgentConfig config_;
    EncodingLayout layout_;
    ActorCritic structuring_;
    ActorCritic exploiting_;
    std::vector<std::vector<int>> host_static_bits_;
    // Exploiting trajectory interleaved with the structuring one; both see
    // the same per-step rewards and returns.
    Trajectory exploiting_traj_;
};

using Agent = std::variant<A2CAgent, DoubleAgent>;

enum class AgentKind { a2c, double_agent };
std::string_view to_string(AgentKind k);
std::optional<AgentKind> parse_agent_kind(std::string_view name);

Agent make_agent(AgentKind kind, const NetworkScenario& scenario, const AgentConfig& config);

// Runs config.episodes episodes (possibly fewer with stop_when_converged),
// updating after each; deterministic given (agent seed, env, config).
template <typename AgentT>
TrainingLog train(AgentT& agent, Env& env, const AgentConfig& config);

TrainingLog train(Agent& agent, Env& env, const AgentConfig& config);

// One greedy episode; exploit outcomes still sample the env's seeded PRNG.
template <typename AgentT>
EpisodeRecord greedy_rollout(AgentT& agent, Env& env, int max_steps, double gamma);

EpisodeRecord greedy_rollout(Agent& agent, Env& env, int max_steps, double gamma);

// Versioned text snapshot of layer sizes and row-major parameters together
// with the config and seed (format documented in the README).
void save_agent(const Agent& agent, const AgentConfig& config, std::ostream& out);
void save_agent_file(const Agent& agent, const AgentConfig& config,
                     const std::filesystem::path& path);
struct AgentSnapshot {
    AgentKind kind = AgentKind::a2c;
    AgentConfig config;
    std::vector<std::pair<std::string, MLP>> nets;
};
AgentSnapshot load_agent_snapshot(std::istream& in);
AgentSnapshot load_agent_snapshot_file(const std::filesystem::path& path);
// Restores parameters into a freshly constructed agent of the same shape.
Agent restore_agent(const AgentSnapshot& snapshot, const NetworkScenario& scenario);

}  // namespace exfil
