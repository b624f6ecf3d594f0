#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "exfilpath/scenario.hpp"

namespace exfil {

enum class PrivilegeLevel : int { none = 0, user = 1, root = 2 };

struct HostStatus {
    bool compromised = false;
    bool reachable = false;
    bool discovered = false;
    PrivilegeLevel access = PrivilegeLevel::none;

    bool operator==(const HostStatus&) const = default;
};

enum class ActionType : int {
    service_scan = 0,
    os_scan = 1,
    subnet_scan = 2,
    process_scan = 3,
    exploit = 4,
    privilege_escalation = 5,
};
inline constexpr int kActionTypeCount = 6;

std::string_view to_string(ActionType t);

struct Action {
    ActionType kind = ActionType::service_scan;
    Address target;
    std::string parameter;  // service for exploit, process for privilege_escalation

    bool operator==(const Action&) const = default;
};

std::string to_string(const Action& a);

struct PenaltyTable {
    double exploit_authentication = -6.0;
    double exploit_data = -4.0;
    double exploit_security = -2.0;
    double exploit_common = -2.0;
    double scan_offset = 1.0;  // scan(c) = exploit(c) + 1

    double exploit_penalty(ServiceCategory c) const;
    double scan_penalty(ServiceCategory c) const;
};

struct RewardModel {
    double step_cost = -1.0;
    double goal_reward = 100.0;
    double timeout_reward = 0.0;
    PenaltyTable penalties;
    double scale_factor = 1.0;  // risk preference: 0.7 accepting, 1.0 neutral, 1.3 averse
};

// low -> 0.9, medium -> 0.6, high -> 0.3
double transition_probability(AttackComplexity complexity);
double transition_probability(const VulnProfile& profile);

// base score + exploitability score / 10
double arrival_reward(const VulnProfile& profile);

// Most-negative applicable category penalty among the target's services,
// times the scale factor. Exploit row for exploit/privilege_escalation,
// scan row otherwise.
double terrain_penalty(const PenaltyTable& table, double scale, ActionType kind,
                       std::span<const ServiceCategory> target_categories);
double terrain_penalty(const NetworkScenario& s, const PenaltyTable& table, double scale,
                       ActionType kind, const HostConfig& target);

struct RewardBreakdown {
    double step_cost = 0.0;
    double terrain_penalty = 0.0;
    double arrival_reward = 0.0;
    double goal_reward = 0.0;

    double total() const { return step_cost + terrain_penalty + arrival_reward + goal_reward; }
};

struct StepOutcome {
    bool action_succeeded = false;
    std::optional<Address> newly_compromised;
    bool goal_reached = false;
    RewardBreakdown reward_breakdown;
};

class EnvState {
public:
    EnvState() = default;
    EnvState(std::shared_ptr<const NetworkScenario> scenario, std::vector<Address> exits);

    const NetworkScenario& scenario() const { return *scenario_; }
    std::shared_ptr<const NetworkScenario> scenario_ptr() const { return scenario_; }
    const std::vector<Address>& exits() const { return exits_; }
    std::span<const HostStatus> status() const { return status_; }
    const HostStatus& status_of(int host_index) const { return status_[host_index]; }
    HostStatus& status_of(int host_index) { return status_[host_index]; }

    bool operator==(const EnvState& other) const {
        return status_ == other.status_ && exits_ == other.exits_;
    }

private:
    std::shared_ptr<const NetworkScenario> scenario_;
    std::vector<Address> exits_;
    std::vector<HostStatus> status_;
};

struct StepResult {
    EnvState next_state;
    double reward = 0.0;
    bool done = false;
    StepOutcome outcome;
};

enum class TerminalKind { continue_episode, goal, timeout };

TerminalKind is_terminal(const EnvState& state, int step_count, int max_steps);

// All actions whose target host is discovered, ordered by target address,
// then action-type index, then parameter name.
std::vector<Action> valid_actions(const EnvState& state);

// Layout of the flat state encoding; alphabets are fixed per scenario.
struct EncodingLayout {
    explicit EncodingLayout(const NetworkScenario& s);

    int subnet_count = 0;
    int max_host_id = 0;
    int os_count = 0;
    int service_count = 0;
    int process_count = 0;

    int per_host = 0;      // 3 status + 3 access + address + os + services + processes
    int host_count = 0;
    int state_dim = 0;     // per_host * host_count
    int action_dim = 0;    // kind + subnet + host id + parameter
    int host_code_dim = 0; // subnet one-hot + host-id one-hot
    int param_dim = 0;     // service_count + process_count

    // Dynamic entries (status + access) sit at the front of each host block.
    static constexpr int dynamic_per_host = 6;

    int host_offset(int host_index) const { return host_index * per_host; }
};

Eigen::VectorXd encode_state(const EnvState& state);
EnvState decode_state(std::shared_ptr<const NetworkScenario> scenario,
                      const Eigen::VectorXd& vec, std::vector<Address> exits = {});
void encode_host(const EnvState& state, int host_index, Eigen::Ref<Eigen::VectorXd> out);
void encode_action(const NetworkScenario& s, const EncodingLayout& layout, const Action& a,
                   Eigen::Ref<Eigen::VectorXd> out);
// Indices of the nonzero entries of the action encoding (one per one-hot group).
void action_one_hots(const NetworkScenario& s, const EncodingLayout& layout, const Action& a,
                     std::vector<int>& out);

class Env {
public:
    Env(std::shared_ptr<const NetworkScenario> scenario, RewardModel reward_model,
        std::uint64_t seed);

    // Restricts the goal set to a subset of the scenario's exit hosts
    // (EP-RL removes exits between iterations). Takes effect on reset.
    void set_exit_hosts(std::vector<Address> exits);

    EnvState reset(std::uint64_t seed);
    EnvState reset();  // reseeds with the seed given at construction

    StepResult step(const Action& action);

    const EnvState& state() const { return state_; }
    const RewardModel& reward_model() const { return reward_model_; }
    const std::vector<Address>& exit_hosts() const { return exits_; }
    int step_count() const { return step_count_; }
    const NetworkScenario& scenario() const { return *scenario_; }
    std::shared_ptr<const NetworkScenario> scenario_ptr() const { return scenario_; }

private:
    bool roll_success(double probability);
    void refresh_reachability(EnvState& state) const;

    std::shared_ptr<const NetworkScenario> scenario_;
    RewardModel reward_model_;
    std::vector<Address> exits_;
    std::uint64_t seed_;
    std::mt19937_64 rng_;
    EnvState state_;
    int step_count_ = 0;
};

// Canonical uniform draw in [0, 1); used for every stochastic decision so
// trajectories are reproducible across platforms.
double canonical_uniform(std::mt19937_64& rng);

}  // namespace exfil
