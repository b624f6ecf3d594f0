#include "exfilpath/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace exfil {

namespace {

constexpr std::uint8_t kUndiscovered = 0;
constexpr std::uint8_t kDiscovered = 1;
constexpr std::uint8_t kUser = 2;
constexpr std::uint8_t kRoot = 3;

std::uint8_t code_at(std::uint64_t key, int host) {
    return static_cast<std::uint8_t>((key >> (2 * host)) & 0x3);
}

std::uint64_t with_code(std::uint64_t key, int host, std::uint8_t code) {
    key &= ~(std::uint64_t{0x3} << (2 * host));
    return key | (std::uint64_t{code} << (2 * host));
}

bool compromised(std::uint8_t code) { return code >= kUser; }

// Packed action descriptor: host index, action type, parameter index
// within the host's service/process list (or -1).
std::uint64_t pack_action(int host, ActionType kind, int param) {
    return (static_cast<std::uint64_t>(host) << 32) |
           (static_cast<std::uint64_t>(static_cast<int>(kind)) << 16) |
           static_cast<std::uint64_t>(param + 1);
}

struct Expander {
    const NetworkScenario& s;
    const RewardModel& rm;
    const std::vector<Address>& exits;
    std::vector<int> exit_hosts;         // host indices
    std::vector<std::uint64_t> subnet_mask_reach;  // per host: subnets it is reachable from
    std::vector<double> scan_pen, exploit_pen;     // per host, unscaled by caller choice

    explicit Expander(const NetworkScenario& scenario, const RewardModel& reward_model,
                      const std::vector<Address>& exit_set)
        : s(scenario), rm(reward_model), exits(exit_set) {
        for (const Address& e : exits) exit_hosts.push_back(s.host_index(e));
        const int n = static_cast<int>(s.hosts.size());
        subnet_mask_reach.resize(n, 0);
        for (int i = 0; i < n; ++i) {
            const HostConfig& h = s.hosts[i];
            std::uint64_t mask = std::uint64_t{1} << s.subnet_index(h.address.subnet);
            for (const auto& rule : s.firewall) {
                if (rule.src_subnet == kInternet || rule.dst_subnet != h.address.subnet)
                    continue;
                if (std::binary_search(h.services.begin(), h.services.end(), rule.service)) {
                    int src = s.subnet_index(rule.src_subnet);
                    if (src >= 0) mask |= std::uint64_t{1} << src;
                }
            }
            subnet_mask_reach[i] = mask;
        }
        for (int i = 0; i < n; ++i) {
            scan_pen.push_back(terrain_penalty(s, rm.penalties, rm.scale_factor,
                                               ActionType::service_scan, s.hosts[i]));
            exploit_pen.push_back(terrain_penalty(s, rm.penalties, rm.scale_factor,
                                                  ActionType::exploit, s.hosts[i]));
        }
    }

    std::uint64_t compromised_subnets(std::uint64_t key) const {
        std::uint64_t mask = 0;
        for (size_t i = 0; i < s.hosts.size(); ++i)
            if (compromised(code_at(key, static_cast<int>(i))))
                mask |= std::uint64_t{1} << s.subnet_index(s.hosts[i].address.subnet);
        return mask;
    }

    bool reachable(std::uint64_t key, int host) const {
        return (subnet_mask_reach[host] & compromised_subnets(key)) != 0;
    }

    bool goal(std::uint64_t key) const {
        for (int e : exit_hosts)
            if (code_at(key, e) == kRoot) return true;
        return false;
    }

    std::uint64_t apply_subnet_scan(std::uint64_t key, int target) const {
        const int subnet = s.hosts[target].address.subnet;
        std::uint64_t mask = std::uint64_t{1} << s.subnet_index(subnet);
        std::uint64_t next = key;
        for (size_t i = 0; i < s.hosts.size(); ++i) {
            if (code_at(key, static_cast<int>(i)) != kUndiscovered) continue;
            if (subnet_mask_reach[i] & mask) next = with_code(next, static_cast<int>(i),
                                                              kDiscovered);
        }
        return next;
    }
};

}  // namespace

std::uint64_t abstract_key(const EnvState& state) {
    std::uint64_t key = 0;
    for (size_t i = 0; i < state.scenario().hosts.size(); ++i) {
        const HostStatus& st = state.status_of(static_cast<int>(i));
        std::uint8_t code = kUndiscovered;
        if (st.access == PrivilegeLevel::root)
            code = kRoot;
        else if (st.access == PrivilegeLevel::user)
            code = kUser;
        else if (st.discovered)
            code = kDiscovered;
        key = with_code(key, static_cast<int>(i), code);
    }
    return key;
}

Action TabularMDP::decode_action(int action) const {
    std::uint64_t code = action_codes[action];
    int host = static_cast<int>(code >> 32);
    ActionType kind = static_cast<ActionType>((code >> 16) & 0xffff);
    int param = static_cast<int>(code & 0xffff) - 1;
    Action a;
    a.kind = kind;
    a.target = scenario->hosts[host].address;
    if (param >= 0) {
        if (kind == ActionType::exploit)
            a.parameter = scenario->hosts[host].services[param];
        else
            a.parameter = scenario->hosts[host].processes[param];
    }
    return a;
}

int TabularMDP::find_state(std::uint64_t key) const {
    auto it = index.find(key);
    return it == index.end() ? -1 : it->second;
}

TabularMDP build_tabular(const NetworkScenario& scenario, const RewardModel& reward_model,
                         OracleLimits limits) {
    return build_tabular(std::make_shared<const NetworkScenario>(scenario), reward_model,
                         limits);
}

TabularMDP build_tabular(std::shared_ptr<const NetworkScenario> scenario,
                         const RewardModel& reward_model, OracleLimits limits,
                         std::vector<Address> exit_override) {
    const NetworkScenario& s = *scenario;
    auto violations = validate_scenario(s);
    if (!violations.empty())
        throw ValidationError("oracle requires a valid scenario", std::move(violations));
    if (s.hosts.size() > 32)
        throw StateCapExceeded("state space exceeds the cap: more than 32 hosts");

    TabularMDP mdp;
    mdp.scenario = scenario;
    mdp.exits = exit_override.empty() ? s.exit_hosts : std::move(exit_override);
    std::sort(mdp.exits.begin(), mdp.exits.end());
    Expander ex(s, reward_model, mdp.exits);

    const int n = static_cast<int>(s.hosts.size());
    const int initial = s.host_index(s.initial_host);
    std::uint64_t initial_key = with_code(0, initial, kRoot);

    std::deque<int> queue;
    auto intern = [&](std::uint64_t key) {
        auto [it, inserted] = mdp.index.try_emplace(key, static_cast<int>(mdp.keys.size()));
        if (inserted) {
            if (mdp.keys.size() >= limits.max_states)
                throw StateCapExceeded("state space exceeds the cap of " +
                                       std::to_string(limits.max_states) + " states");
            mdp.keys.push_back(key);
            mdp.terminal.push_back(ex.goal(key));
            queue.push_back(it->second);
        }
        return it->second;
    };

    mdp.initial_state = intern(initial_key);
    mdp.action_begin.push_back(0);
    mdp.outcome_begin.push_back(0);

    while (!queue.empty()) {
        int state = queue.front();
        queue.pop_front();
        std::uint64_t key = mdp.keys[state];

        // States enter the queue exactly once, in discovery order, so the
        // flat arrays are appended in state order.
        if (static_cast<int>(mdp.action_begin.size()) - 1 != state)
            throw std::logic_error("tabular build out of order");

        if (mdp.terminal[state]) {
            mdp.action_begin.push_back(static_cast<int>(mdp.action_codes.size()));
            continue;
        }

        auto add_outcome = [&](std::uint64_t next_key, double p, double r) {
            int next = intern(next_key);
            mdp.outcomes.push_back({next, p, r});
        };

        for (int host = 0; host < n; ++host) {
            std::uint8_t code = code_at(key, host);
            if (code == kUndiscovered) continue;
            const HostConfig& h = s.hosts[host];
            const double base = reward_model.step_cost;

            for (ActionType kind :
                 {ActionType::service_scan, ActionType::os_scan, ActionType::subnet_scan,
                  ActionType::process_scan}) {
                mdp.action_codes.push_back(pack_action(host, kind, -1));
                double r = base + ex.scan_pen[host];
                if (kind == ActionType::subnet_scan && compromised(code)) {
                    std::uint64_t next = ex.apply_subnet_scan(key, host);
                    add_outcome(next, 1.0, r);
                } else {
                    add_outcome(key, 1.0, r);
                }
                mdp.outcome_begin.push_back(static_cast<int>(mdp.outcomes.size()));
            }

            for (size_t v = 0; v < h.services.size(); ++v) {
                mdp.action_codes.push_back(
                    pack_action(host, ActionType::exploit, static_cast<int>(v)));
                double r = base + ex.exploit_pen[host];
                auto vuln = h.exploit_vulns.find(h.services[v]);
                bool aligned = !compromised(code) && ex.reachable(key, host) &&
                               vuln != h.exploit_vulns.end();
                if (aligned) {
                    double p = transition_probability(vuln->second);
                    std::uint64_t next = with_code(key, host, kUser);
                    add_outcome(next, p, r + arrival_reward(vuln->second));
                    if (p < 1.0) add_outcome(key, 1.0 - p, r);
                } else {
                    add_outcome(key, 1.0, r);
                }
                mdp.outcome_begin.push_back(static_cast<int>(mdp.outcomes.size()));
            }

            for (size_t p = 0; p < h.processes.size(); ++p) {
                mdp.action_codes.push_back(pack_action(host, ActionType::privilege_escalation,
                                                       static_cast<int>(p)));
                double r = base + ex.exploit_pen[host];
                auto vuln = h.privesc_vulns.find(h.processes[p]);
                bool aligned = code == kUser && vuln != h.privesc_vulns.end();
                if (aligned) {
                    double prob = transition_probability(vuln->second);
                    std::uint64_t next = with_code(key, host, kRoot);
                    double bonus = arrival_reward(vuln->second);
                    if (ex.goal(next)) bonus += reward_model.goal_reward;
                    add_outcome(next, prob, r + bonus);
                    if (prob < 1.0) add_outcome(key, 1.0 - prob, r);
                } else {
                    add_outcome(key, 1.0, r);
                }
                mdp.outcome_begin.push_back(static_cast<int>(mdp.outcomes.size()));
            }
        }
        mdp.action_begin.push_back(static_cast<int>(mdp.action_codes.size()));
    }
    return mdp;
}

ValueSolution value_iteration(const TabularMDP& mdp, double gamma, double tolerance) {
    if (gamma <= 0.0 || gamma >= 1.0)
        throw std::invalid_argument("gamma must lie in (0, 1)");
    const int n = mdp.state_count();
    ValueSolution sol;
    sol.values.assign(n, 0.0);
    std::vector<double> next(n, 0.0);
    double residual = std::numeric_limits<double>::infinity();
    while (residual >= tolerance) {
        residual = 0.0;
        for (int s = 0; s < n; ++s) {
            if (mdp.terminal[s] || mdp.actions_of(s) == 0) {
                next[s] = 0.0;
                continue;
            }
            double best = -std::numeric_limits<double>::infinity();
            for (int a = mdp.action_begin[s]; a < mdp.action_begin[s + 1]; ++a) {
                double q = 0.0;
                for (const auto& o : mdp.outcomes_of(a))
                    q += o.probability * (o.reward + gamma * sol.values[o.next]);
                if (q > best) best = q;
            }
            next[s] = best;
            residual = std::max(residual, std::abs(best - sol.values[s]));
        }
        sol.values.swap(next);
        ++sol.iterations;
    }
    sol.residual = residual;
    sol.policy.assign(n, -1);
    for (int s = 0; s < n; ++s) {
        if (mdp.terminal[s] || mdp.actions_of(s) == 0) continue;
        double best = -std::numeric_limits<double>::infinity();
        int best_a = -1;
        for (int a = mdp.action_begin[s]; a < mdp.action_begin[s + 1]; ++a) {
            double q = 0.0;
            for (const auto& o : mdp.outcomes_of(a))
                q += o.probability * (o.reward + gamma * sol.values[o.next]);
            if (q > best) {
                best = q;
                best_a = a;
            }
        }
        sol.policy[s] = best_a;
    }
    return sol;
}

std::optional<Address> oracle_optimal_exit(const TabularMDP& mdp, const ValueSolution& sol) {
    int state = mdp.initial_state;
    const int n = mdp.state_count();
    for (int guard = 0; guard < 4 * n + 16; ++guard) {
        if (mdp.terminal[state]) {
            for (const Address& e : mdp.exits) {
                int host = mdp.scenario->host_index(e);
                if (code_at(mdp.keys[state], host) == kRoot) return e;
            }
            return std::nullopt;
        }
        int a = sol.policy[state];
        if (a < 0) return std::nullopt;
        // Follow the outcome that changes the state (success branch); pure
        // self-loop actions mean the policy is stuck.
        int next = state;
        for (const auto& o : mdp.outcomes_of(a))
            if (o.next != state) {
                next = o.next;
                break;
            }
        if (next == state) return std::nullopt;
        state = next;
    }
    return std::nullopt;
}

namespace {

struct PathEnumerator {
    const NetworkScenario& s;
    const RewardModel& rm;
    std::vector<EnumeratedPath> out;
    std::vector<int> path;
    std::vector<bool> on_path;

    PathEnumerator(const NetworkScenario& scenario, const RewardModel& reward_model)
        : s(scenario), rm(reward_model), on_path(scenario.hosts.size(), false) {}

    bool edge(int from, int to) const {
        const HostConfig& u = s.hosts[from];
        const HostConfig& v = s.hosts[to];
        if (v.exploit_vulns.empty()) return false;
        if (u.address.subnet == v.address.subnet) return true;
        for (const auto& svc : v.services)
            if (subnet_reachable(s, u.address.subnet, v.address.subnet, svc)) return true;
        return false;
    }

    double best_case_reward() const {
        // Minimal action sequence: a subnet scan whenever the next hop is
        // still undiscovered, one exploit per hop, one privilege
        // escalation at the exit; every roll succeeds.
        std::vector<bool> discovered(s.hosts.size(), false);
        discovered[path[0]] = true;
        auto discover_from = [&](int host) {
            const int subnet = s.hosts[host].address.subnet;
            for (size_t i = 0; i < s.hosts.size(); ++i) {
                if (discovered[i]) continue;
                const HostConfig& h = s.hosts[i];
                bool visible = h.address.subnet == subnet;
                for (auto it = h.services.begin(); !visible && it != h.services.end(); ++it)
                    visible = subnet_reachable(s, subnet, h.address.subnet, *it);
                if (visible) discovered[i] = true;
            }
        };
        double reward = 0.0;
        for (size_t i = 1; i < path.size(); ++i) {
            int from = path[i - 1];
            int to = path[i];
            if (!discovered[to]) {
                reward += rm.step_cost + terrain_penalty(s, rm.penalties, rm.scale_factor,
                                                         ActionType::subnet_scan,
                                                         s.hosts[from]);
                discover_from(from);
            }
            double arrival = 0.0;
            for (const auto& [svc, vuln] : s.hosts[to].exploit_vulns)
                arrival = std::max(arrival, arrival_reward(vuln));
            reward += rm.step_cost +
                      terrain_penalty(s, rm.penalties, rm.scale_factor, ActionType::exploit,
                                      s.hosts[to]) +
                      arrival;
        }
        int exit = path.back();
        double privesc_arrival = 0.0;
        for (const auto& [proc, vuln] : s.hosts[exit].privesc_vulns)
            privesc_arrival = std::max(privesc_arrival, arrival_reward(vuln));
        reward += rm.step_cost +
                  terrain_penalty(s, rm.penalties, rm.scale_factor,
                                  ActionType::privilege_escalation, s.hosts[exit]) +
                  privesc_arrival + rm.goal_reward;
        return reward;
    }

    void dfs(int host) {
        if (s.is_exit(s.hosts[host].address) && !s.hosts[host].privesc_vulns.empty()) {
            EnumeratedPath p;
            for (int i : path) p.hosts.push_back(s.hosts[i].address);
            p.best_case_reward = best_case_reward();
            out.push_back(std::move(p));
        }
        for (size_t i = 0; i < s.hosts.size(); ++i) {
            if (on_path[i] || !edge(host, static_cast<int>(i))) continue;
            on_path[i] = true;
            path.push_back(static_cast<int>(i));
            dfs(static_cast<int>(i));
            path.pop_back();
            on_path[i] = false;
        }
    }
};

}  // namespace

std::vector<EnumeratedPath> enumerate_paths(const NetworkScenario& scenario,
                                            const RewardModel& reward_model, int max_hosts) {
    if (static_cast<int>(scenario.hosts.size()) > max_hosts)
        throw StateCapExceeded("path enumeration supports at most " +
                               std::to_string(max_hosts) + " hosts");
    PathEnumerator en(scenario, reward_model);
    int initial = scenario.host_index(scenario.initial_host);
    en.path.push_back(initial);
    en.on_path[initial] = true;
    en.dfs(initial);
    return en.out;
}

}  // namespace exfil
