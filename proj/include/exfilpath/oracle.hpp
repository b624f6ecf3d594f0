#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "exfilpath/env.hpp"

namespace exfil {

class StateCapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OracleLimits {
    std::size_t max_states = 2'000'000;
};

// Exact expansion of the environment over the abstract per-host status
// (discovered, access); static configuration is constant and dropped.
// Host codes: 0 undiscovered, 1 discovered, 2 user access, 3 root access,
// packed two bits per host into the state key.
struct TabularMDP {
    struct Outcome {
        int next = 0;
        double probability = 0.0;
        double reward = 0.0;
    };

    std::shared_ptr<const NetworkScenario> scenario;
    std::vector<Address> exits;
    std::vector<std::uint64_t> keys;          // per state
    std::vector<bool> terminal;               // per state
    std::vector<int> action_begin;            // per state, size states+1
    std::vector<std::uint64_t> action_codes;  // per action: packed (host, kind, param)
    std::vector<int> outcome_begin;           // per action, size actions+1
    std::vector<Outcome> outcomes;
    int initial_state = 0;
    std::unordered_map<std::uint64_t, int> index;

    int state_count() const { return static_cast<int>(keys.size()); }
    int actions_of(int state) const { return action_begin[state + 1] - action_begin[state]; }
    std::span<const Outcome> outcomes_of(int action) const {
        return {outcomes.data() + outcome_begin[action],
                static_cast<size_t>(outcome_begin[action + 1] - outcome_begin[action])};
    }
    Action decode_action(int action) const;
    int find_state(std::uint64_t key) const;  // -1 if absent
};

// Abstract key of a concrete environment state.
std::uint64_t abstract_key(const EnvState& state);

TabularMDP build_tabular(const NetworkScenario& scenario, const RewardModel& reward_model,
                         OracleLimits limits = {});
TabularMDP build_tabular(std::shared_ptr<const NetworkScenario> scenario,
                         const RewardModel& reward_model, OracleLimits limits = {},
                         std::vector<Address> exit_override = {});

struct ValueSolution {
    std::vector<double> values;
    std::vector<int> policy;  // action index per state; -1 for terminal
    int iterations = 0;
    double residual = 0.0;
};

ValueSolution value_iteration(const TabularMDP& mdp, double gamma, double tolerance = 1e-10);

// Hand-constructable MDP for tests: value_iteration also accepts tables
// built directly (fill keys/action_begin/outcome_begin/outcomes yourself).

struct EnumeratedPath {
    std::vector<Address> hosts;
    double best_case_reward = 0.0;
};

// All simple host paths initial -> exit consistent with firewall
// reachability, each with its best-case deterministic reward (every
// exploit succeeds on the first try, minimal action sequence).
std::vector<EnumeratedPath> enumerate_paths(const NetworkScenario& scenario,
                                            const RewardModel& reward_model,
                                            int max_hosts = 12);

// Exit reached by following the greedy policy through success branches
// only (failed actions leave the state unchanged, so the visited state
// sequence is deterministic). Returns nullopt if the policy never reaches
// a goal state.
std::optional<Address> oracle_optimal_exit(const TabularMDP& mdp, const ValueSolution& sol);

}  // namespace exfil
