#include "exfilpath/env.hpp"

#include <algorithm>
#include <cassert>

namespace exfil {

std::string_view to_string(ActionType t) {
    switch (t) {
        case ActionType::service_scan: return "service_scan";
        case ActionType::os_scan: return "os_scan";
        case ActionType::subnet_scan: return "subnet_scan";
        case ActionType::process_scan: return "process_scan";
        case ActionType::exploit: return "exploit";
        case ActionType::privilege_escalation: return "privilege_escalation";
    }
    return "?";
}

std::string to_string(const Action& a) {
    std::string s = std::string(to_string(a.kind)) + " " + to_string(a.target);
    if (!a.parameter.empty()) s += " " + a.parameter;
    return s;
}

double PenaltyTable::exploit_penalty(ServiceCategory c) const {
    switch (c) {
        case ServiceCategory::authentication: return exploit_authentication;
        case ServiceCategory::data: return exploit_data;
        case ServiceCategory::security: return exploit_security;
        case ServiceCategory::common: return exploit_common;
    }
    return 0.0;
}

double PenaltyTable::scan_penalty(ServiceCategory c) const {
    return exploit_penalty(c) + scan_offset;
}

double transition_probability(AttackComplexity complexity) {
    switch (complexity) {
        case AttackComplexity::low: return 0.9;
        case AttackComplexity::medium: return 0.6;
        case AttackComplexity::high: return 0.3;
    }
    return 0.0;
}

double transition_probability(const VulnProfile& profile) {
    return transition_probability(profile.complexity);
}

double arrival_reward(const VulnProfile& profile) {
    return profile.base_score + profile.exploitability_score / 10.0;
}

double terrain_penalty(const PenaltyTable& table, double scale, ActionType kind,
                       std::span<const ServiceCategory> target_categories) {
    assert(!target_categories.empty());
    bool exploit_row =
        kind == ActionType::exploit || kind == ActionType::privilege_escalation;
    double worst = 0.0;
    bool first = true;
    for (ServiceCategory c : target_categories) {
        double p = exploit_row ? table.exploit_penalty(c) : table.scan_penalty(c);
        if (first || p < worst) worst = p;
        first = false;
    }
    return scale * worst;
}

double terrain_penalty(const NetworkScenario& s, const PenaltyTable& table, double scale,
                       ActionType kind, const HostConfig& target) {
    std::vector<ServiceCategory> cats;
    cats.reserve(target.services.size());
    for (const auto& name : target.services) {
        const ServiceDef* def = s.find_service(name);
        if (def) cats.push_back(def->category);
    }
    return terrain_penalty(table, scale, kind, cats);
}

EnvState::EnvState(std::shared_ptr<const NetworkScenario> scenario, std::vector<Address> exits)
    : scenario_(std::move(scenario)), exits_(std::move(exits)) {
    if (exits_.empty()) exits_ = scenario_->exit_hosts;
    std::sort(exits_.begin(), exits_.end());
    status_.assign(scenario_->hosts.size(), HostStatus{});
}

TerminalKind is_terminal(const EnvState& state, int step_count, int max_steps) {
    for (const Address& e : state.exits()) {
        int i = state.scenario().host_index(e);
        if (i >= 0 && state.status_of(i).access == PrivilegeLevel::root)
            return TerminalKind::goal;
    }
    if (step_count >= max_steps) return TerminalKind::timeout;
    return TerminalKind::continue_episode;
}

std::vector<Action> valid_actions(const EnvState& state) {
    const NetworkScenario& s = state.scenario();
    std::vector<Action> out;
    for (size_t i = 0; i < s.hosts.size(); ++i) {
        if (!state.status_of(static_cast<int>(i)).discovered) continue;
        const HostConfig& h = s.hosts[i];
        out.push_back({ActionType::service_scan, h.address, ""});
        out.push_back({ActionType::os_scan, h.address, ""});
        out.push_back({ActionType::subnet_scan, h.address, ""});
        out.push_back({ActionType::process_scan, h.address, ""});
        for (const auto& svc : h.services) out.push_back({ActionType::exploit, h.address, svc});
        for (const auto& proc : h.processes)
            out.push_back({ActionType::privilege_escalation, h.address, proc});
    }
    return out;
}

EncodingLayout::EncodingLayout(const NetworkScenario& s) {
    subnet_count = static_cast<int>(s.subnets.size());
    max_host_id = s.max_hosts_per_subnet();
    os_count = static_cast<int>(s.os_set.size());
    service_count = static_cast<int>(s.services.size());
    process_count = static_cast<int>(s.processes.size());
    per_host = dynamic_per_host + subnet_count + max_host_id + os_count + service_count +
               process_count;
    host_count = static_cast<int>(s.hosts.size());
    state_dim = per_host * host_count;
    host_code_dim = subnet_count + max_host_id;
    param_dim = service_count + process_count;
    action_dim = kActionTypeCount + host_code_dim + param_dim;
}

namespace {

int index_of(const std::vector<std::string>& sorted, const std::string& name) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), name);
    if (it == sorted.end() || *it != name) return -1;
    return static_cast<int>(it - sorted.begin());
}

int service_index(const NetworkScenario& s, const std::string& name) {
    for (size_t i = 0; i < s.services.size(); ++i)
        if (s.services[i].name == name) return static_cast<int>(i);
    return -1;
}

}  // namespace

void encode_host(const EnvState& state, int host_index, Eigen::Ref<Eigen::VectorXd> out) {
    const NetworkScenario& s = state.scenario();
    EncodingLayout layout(s);
    const HostConfig& h = s.hosts[host_index];
    const HostStatus& st = state.status_of(host_index);
    out.setZero();
    out[0] = st.compromised ? 1.0 : 0.0;
    out[1] = st.reachable ? 1.0 : 0.0;
    out[2] = st.discovered ? 1.0 : 0.0;
    out[3 + static_cast<int>(st.access)] = 1.0;
    int base = EncodingLayout::dynamic_per_host;
    out[base + s.subnet_index(h.address.subnet)] = 1.0;
    base += layout.subnet_count;
    out[base + h.address.host] = 1.0;
    base += layout.max_host_id;
    int os = index_of(s.os_set, h.os);
    if (os >= 0) out[base + os] = 1.0;
    base += layout.os_count;
    for (const auto& svc : h.services) {
        int i = service_index(s, svc);
        if (i >= 0) out[base + i] = 1.0;
    }
    base += layout.service_count;
    for (const auto& proc : h.processes) {
        int i = index_of(s.processes, proc);
        if (i >= 0) out[base + i] = 1.0;
    }
}

Eigen::VectorXd encode_state(const EnvState& state) {
    EncodingLayout layout(state.scenario());
    Eigen::VectorXd v(layout.state_dim);
    for (int i = 0; i < layout.host_count; ++i)
        encode_host(state, i, v.segment(layout.host_offset(i), layout.per_host));
    return v;
}

EnvState decode_state(std::shared_ptr<const NetworkScenario> scenario,
                      const Eigen::VectorXd& vec, std::vector<Address> exits) {
    EncodingLayout layout(*scenario);
    if (vec.size() != layout.state_dim)
        throw std::invalid_argument("state vector has wrong length");
    EnvState state(scenario, std::move(exits));
    for (int i = 0; i < layout.host_count; ++i) {
        const int off = layout.host_offset(i);
        HostStatus& st = state.status_of(i);
        st.compromised = vec[off + 0] > 0.5;
        st.reachable = vec[off + 1] > 0.5;
        st.discovered = vec[off + 2] > 0.5;
        int access = 0;
        for (int a = 1; a < 3; ++a)
            if (vec[off + 3 + a] > vec[off + 3 + access]) access = a;
        st.access = static_cast<PrivilegeLevel>(access);
    }
    return state;
}

void action_one_hots(const NetworkScenario& s, const EncodingLayout& layout, const Action& a,
                     std::vector<int>& out) {
    out.clear();
    out.push_back(static_cast<int>(a.kind));
    int base = kActionTypeCount;
    out.push_back(base + s.subnet_index(a.target.subnet));
    base += layout.subnet_count;
    out.push_back(base + a.target.host);
    base += layout.max_host_id;
    if (a.kind == ActionType::exploit) {
        int i = service_index(s, a.parameter);
        if (i >= 0) out.push_back(base + i);
    } else if (a.kind == ActionType::privilege_escalation) {
        int i = index_of(s.processes, a.parameter);
        if (i >= 0) out.push_back(base + layout.service_count + i);
    }
}

void encode_action(const NetworkScenario& s, const EncodingLayout& layout, const Action& a,
                   Eigen::Ref<Eigen::VectorXd> out) {
    out.setZero();
    std::vector<int> ones;
    action_one_hots(s, layout, a, ones);
    for (int i : ones) out[i] = 1.0;
}

double canonical_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Env::Env(std::shared_ptr<const NetworkScenario> scenario, RewardModel reward_model,
         std::uint64_t seed)
    : scenario_(std::move(scenario)),
      reward_model_(reward_model),
      exits_(scenario_->exit_hosts),
      seed_(seed),
      rng_(seed),
      state_(scenario_, exits_) {
    auto violations = validate_scenario(*scenario_);
    if (!violations.empty())
        throw ValidationError("environment requires a valid scenario", std::move(violations));
    if (scenario_->subnets.size() > 64)
        throw std::invalid_argument("at most 64 subnets supported");
}

void Env::set_exit_hosts(std::vector<Address> exits) {
    for (const Address& e : exits)
        if (!scenario_->is_exit(e))
            throw std::invalid_argument("exit override " + to_string(e) +
                                        " is not an exit host of the scenario");
    exits_ = std::move(exits);
    std::sort(exits_.begin(), exits_.end());
}

EnvState Env::reset(std::uint64_t seed) {
    seed_ = seed;
    return reset();
}

EnvState Env::reset() {
    rng_.seed(seed_);
    step_count_ = 0;
    state_ = EnvState(scenario_, exits_);
    int init = scenario_->host_index(scenario_->initial_host);
    HostStatus& st = state_.status_of(init);
    st.compromised = true;
    st.reachable = true;
    st.discovered = true;
    st.access = PrivilegeLevel::root;
    refresh_reachability(state_);
    return state_;
}

bool Env::roll_success(double probability) {
    return canonical_uniform(rng_) < probability;
}

void Env::refresh_reachability(EnvState& state) const {
    const NetworkScenario& s = *scenario_;
    std::uint64_t compromised_subnets = 0;
    for (size_t i = 0; i < s.hosts.size(); ++i)
        if (state.status_of(static_cast<int>(i)).compromised)
            compromised_subnets |= std::uint64_t{1} << s.subnet_index(s.hosts[i].address.subnet);
    for (size_t i = 0; i < s.hosts.size(); ++i) {
        HostStatus& st = state.status_of(static_cast<int>(i));
        if (st.reachable) continue;
        const HostConfig& h = s.hosts[i];
        int own = s.subnet_index(h.address.subnet);
        if (compromised_subnets & (std::uint64_t{1} << own)) {
            st.reachable = true;
            continue;
        }
        for (const auto& rule : s.firewall) {
            if (rule.src_subnet == kInternet || rule.dst_subnet != h.address.subnet) continue;
            int src = s.subnet_index(rule.src_subnet);
            if (src < 0 || !(compromised_subnets & (std::uint64_t{1} << src))) continue;
            if (std::binary_search(h.services.begin(), h.services.end(), rule.service)) {
                st.reachable = true;
                break;
            }
        }
    }
}

StepResult Env::step(const Action& action) {
    const NetworkScenario& s = *scenario_;
    int target = s.host_index(action.target);
    if (target < 0)
        throw std::invalid_argument("action targets undefined host " + to_string(action.target));
    if (!state_.status_of(target).discovered)
        throw std::invalid_argument("inadmissible action: target " + to_string(action.target) +
                                    " is undiscovered");
    const bool wants_param = action.kind == ActionType::exploit ||
                             action.kind == ActionType::privilege_escalation;
    if (wants_param && action.parameter.empty())
        throw std::invalid_argument("malformed action: missing parameter");
    if (!wants_param && !action.parameter.empty())
        throw std::invalid_argument("malformed action: scans take no parameter");
    if (action.kind == ActionType::exploit && !s.find_service(action.parameter))
        throw std::invalid_argument("malformed action: unknown service '" + action.parameter +
                                    "'");
    if (action.kind == ActionType::privilege_escalation &&
        index_of(s.processes, action.parameter) < 0)
        throw std::invalid_argument("malformed action: unknown process '" + action.parameter +
                                    "'");

    const HostConfig& host = s.hosts[target];
    StepResult result;
    RewardBreakdown& bd = result.outcome.reward_breakdown;
    bd.step_cost = reward_model_.step_cost;
    bd.terrain_penalty = terrain_penalty(s, reward_model_.penalties,
                                         reward_model_.scale_factor, action.kind, host);

    HostStatus& st = state_.status_of(target);
    switch (action.kind) {
        case ActionType::service_scan:
        case ActionType::os_scan:
        case ActionType::process_scan:
            // The queried attribute is static configuration, which the state
            // encoding already carries; the action only costs reward.
            result.outcome.action_succeeded = true;
            break;
        case ActionType::subnet_scan: {
            if (!st.compromised) break;
            result.outcome.action_succeeded = true;
            for (size_t i = 0; i < s.hosts.size(); ++i) {
                HostStatus& other = state_.status_of(static_cast<int>(i));
                if (other.discovered) continue;
                const HostConfig& h = s.hosts[i];
                bool visible = h.address.subnet == host.address.subnet;
                for (auto it = h.services.begin(); !visible && it != h.services.end(); ++it)
                    visible = subnet_reachable(s, host.address.subnet, h.address.subnet, *it);
                if (visible) {
                    other.discovered = true;
                    other.reachable = true;
                }
            }
            break;
        }
        case ActionType::exploit: {
            auto vuln = host.exploit_vulns.find(action.parameter);
            bool aligned = st.reachable && !st.compromised &&
                           std::binary_search(host.services.begin(), host.services.end(),
                                              action.parameter) &&
                           vuln != host.exploit_vulns.end();
            if (!aligned) break;
            if (roll_success(transition_probability(vuln->second))) {
                result.outcome.action_succeeded = true;
                st.compromised = true;
                st.access = PrivilegeLevel::user;
                result.outcome.newly_compromised = host.address;
                bd.arrival_reward = arrival_reward(vuln->second);
                refresh_reachability(state_);
            }
            break;
        }
        case ActionType::privilege_escalation: {
            auto vuln = host.privesc_vulns.find(action.parameter);
            bool aligned = st.compromised && st.access == PrivilegeLevel::user &&
                           std::binary_search(host.processes.begin(), host.processes.end(),
                                              action.parameter) &&
                           vuln != host.privesc_vulns.end();
            if (!aligned) break;
            if (roll_success(transition_probability(vuln->second))) {
                result.outcome.action_succeeded = true;
                st.access = PrivilegeLevel::root;
                bd.arrival_reward = arrival_reward(vuln->second);
            }
            break;
        }
    }

    ++step_count_;
    bool goal = false;
    for (const Address& e : exits_) {
        int i = s.host_index(e);
        if (i >= 0 && state_.status_of(i).access == PrivilegeLevel::root) goal = true;
    }
    if (goal) {
        bd.goal_reward = reward_model_.goal_reward;
        result.outcome.goal_reached = true;
    }
    result.reward = bd.total();
    result.done = goal;
    result.next_state = state_;
    return result;
}

}  // namespace exfil
