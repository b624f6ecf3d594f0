#include "exfilpath/agents.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace exfil {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;     // agent init
constexpr std::uint64_t kPolicyStream = 0x706f6c69;   // action sampling
constexpr std::uint64_t kEpisodeStream = 0x65707330;  // per-episode env seeds

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Backprop of a scalar output grad down to the layer-1 preactivation delta.
// Accumulates grads for biases[0] and all layers above; the caller adds the
// returned delta to grads.weights[0] columns of the input bits it used.
Eigen::VectorXd backward_to_pre(const MLP& net, const MLPActivations& acts, double dout,
                                MLPGrads& grads) {
    const size_t layers = net.weights.size();
    Eigen::VectorXd d = Eigen::VectorXd::Constant(1, dout);
    for (size_t l = layers; l-- > 1;) {
        grads.weights[l].noalias() += d * acts.hidden[l - 1].transpose();
        grads.biases[l] += d;
        Eigen::VectorXd dh = net.weights[l].transpose() * d;
        d = (1.0 - acts.hidden[l - 1].array().square()) * dh.array();
    }
    grads.biases[0] += d;
    return d;
}

void add_column_grads(MLPGrads& grads, std::span<const int> bits, const Eigen::VectorXd& d) {
    for (int b : bits) grads.weights[0].col(b) += d;
}

void clip_global_norm(MLPGrads& grads, double max_norm) {
    double norm = std::sqrt(grads.squared_norm());
    if (norm > max_norm && norm > 0.0) grads.scale(max_norm / norm);
}

}  // namespace

void compute_returns_and_advantages(Trajectory& trajectory, double gamma,
                                    double terminal_value) {
    double acc = terminal_value;
    for (size_t i = trajectory.size(); i-- > 0;) {
        acc = trajectory[i].reward + gamma * acc;
        trajectory[i].return_to_go = acc;
        trajectory[i].advantage = acc - trajectory[i].value_estimate;
    }
}

ActorCritic::ActorCritic(int shared_dim, int cand_dim, std::vector<int> actor_hidden,
                         std::vector<int> critic_hidden, const AgentConfig& config,
                         std::mt19937_64& init_rng)
    : actor_([&] {
          std::vector<int> sizes{shared_dim + cand_dim};
          sizes.insert(sizes.end(), actor_hidden.begin(), actor_hidden.end());
          sizes.push_back(1);
          return MLP::make(std::move(sizes), init_rng);
      }()),
      critic_([&] {
          std::vector<int> sizes{shared_dim};
          sizes.insert(sizes.end(), critic_hidden.begin(), critic_hidden.end());
          sizes.push_back(1);
          return MLP::make(std::move(sizes), init_rng);
      }()),
      actor_opt_(actor_, {config.learning_rate, config.adam_beta1, config.adam_beta2,
                          config.adam_epsilon}),
      critic_opt_(critic_, {config.learning_rate, config.adam_beta1, config.adam_beta2,
                            config.adam_epsilon}),
      entropy_coef_(config.entropy_coef),
      grad_clip_(config.grad_clip) {}

void ActorCritic::scores(std::span<const int> shared_bits, const TrajectoryStep& step,
                         std::vector<double>& out) const {
    Eigen::VectorXd pre = mlp_layer1_pre(actor_, shared_bits);
    const int n = step.candidate_count();
    out.resize(n);
    for (int c = 0; c < n; ++c)
        out[c] = mlp_forward_from_pre(actor_, pre, step.candidate(c), nullptr);
}

double ActorCritic::score_one(std::span<const int> shared_bits,
                              std::span<const int> cand_bits) const {
    return mlp_forward_from_pre(actor_, mlp_layer1_pre(actor_, shared_bits), cand_bits, nullptr);
}

double ActorCritic::value(std::span<const int> state_bits) const {
    return mlp_forward_bits(critic_, state_bits, nullptr);
}

double ActorCritic::actor_objective(const Trajectory& trajectory) const {
    if (trajectory.empty()) return 0.0;
    double loss = 0.0;
    std::vector<double> scores;
    for (const auto& step : trajectory) {
        scores.clear();
        this->scores(step.state_bits, step, scores);
        std::vector<double> probs = softmax(scores);
        loss -= step.advantage * std::log(probs[step.chosen]);
        if (entropy_coef_ != 0.0) {
            double entropy = 0.0;
            for (double p : probs) entropy -= p * std::log(p);
            loss -= entropy_coef_ * entropy;
        }
    }
    return loss / static_cast<double>(trajectory.size());
}

double ActorCritic::critic_objective(const Trajectory& trajectory) const {
    if (trajectory.empty()) return 0.0;
    double loss = 0.0;
    for (const auto& step : trajectory) {
        double err = value(step.state_bits) - step.return_to_go;
        loss += err * err;
    }
    return loss / static_cast<double>(trajectory.size());
}

void ActorCritic::gradients(const Trajectory& trajectory, MLPGrads& actor_out,
                            MLPGrads& critic_out, double* actor_loss,
                            double* critic_loss) const {
    actor_out.set_zero();
    critic_out.set_zero();
    double aloss = 0.0;
    double closs = 0.0;
    if (trajectory.empty()) {
        if (actor_loss) *actor_loss = 0.0;
        if (critic_loss) *critic_loss = 0.0;
        return;
    }
    const double inv_t = 1.0 / static_cast<double>(trajectory.size());
    std::vector<double> scores;
    std::vector<MLPActivations> acts;
    MLPActivations critic_acts;
    Eigen::VectorXd pre;
    Eigen::VectorXd dpre_sum(actor_.layer_sizes[1]);
    for (const auto& step : trajectory) {
        const int n = step.candidate_count();
        pre = mlp_layer1_pre(actor_, step.state_bits);
        if (static_cast<int>(acts.size()) < n) acts.resize(n);
        scores.resize(n);
        for (int c = 0; c < n; ++c)
            scores[c] = mlp_forward_from_pre(actor_, pre, step.candidate(c), &acts[c]);
        std::vector<double> probs = softmax(scores);
        aloss -= step.advantage * std::log(probs[step.chosen]);
        double entropy = 0.0;
        if (entropy_coef_ != 0.0) {
            for (double p : probs) entropy -= p * std::log(p);
            aloss -= entropy_coef_ * entropy;
        }
        if (step.advantage != 0.0 || entropy_coef_ != 0.0) {
            dpre_sum.setZero();
            for (int c = 0; c < n; ++c) {
                double indicator = c == step.chosen ? 1.0 : 0.0;
                double dout = -step.advantage * inv_t * (indicator - probs[c]);
                if (entropy_coef_ != 0.0)
                    dout += entropy_coef_ * inv_t * probs[c] * (std::log(probs[c]) + entropy);
                if (dout == 0.0) continue;
                Eigen::VectorXd dpre = backward_to_pre(actor_, acts[c], dout, actor_out);
                add_column_grads(actor_out, step.candidate(c), dpre);
                dpre_sum += dpre;
            }
            add_column_grads(actor_out, step.state_bits, dpre_sum);
        }
        // Critic: mean squared error of V(s_t) against R_t.
        double v = mlp_forward_bits(critic_, step.state_bits, &critic_acts);
        double err = v - step.return_to_go;
        closs += err * err;
        Eigen::VectorXd dpre_c = backward_to_pre(critic_, critic_acts, 2.0 * err * inv_t,
                                                 critic_out);
        add_column_grads(critic_out, step.state_bits, dpre_c);
    }
    if (actor_loss) *actor_loss = aloss * inv_t;
    if (critic_loss) *critic_loss = closs * inv_t;
}

LossReport ActorCritic::update(const Trajectory& trajectory) {
    MLPGrads actor_grads(actor_);
    MLPGrads critic_grads(critic_);
    LossReport report;
    gradients(trajectory, actor_grads, critic_grads, &report.actor_loss, &report.critic_loss);
    if (!actor_grads.all_finite() || !critic_grads.all_finite()) {
        report.skipped = true;
        return report;
    }
    if (grad_clip_ > 0.0) {
        clip_global_norm(actor_grads, grad_clip_);
        clip_global_norm(critic_grads, grad_clip_);
    }
    actor_opt_.step(actor_, actor_grads);
    critic_opt_.step(critic_, critic_grads);
    return report;
}

WindowStats window_stats(const TrainingLog& log, int end, int window) {
    WindowStats ws;
    int lo = std::max(0, end - window);
    int n = end - lo;
    if (n <= 0) return ws;
    for (int i = lo; i < end; ++i) {
        ws.mean_reward += log.rows[i].total_reward;
        ws.mean_steps += log.rows[i].steps;
        ws.goal_rate += log.rows[i].goal_reached ? 1.0 : 0.0;
    }
    ws.mean_reward /= n;
    ws.mean_steps /= n;
    ws.goal_rate /= n;
    return ws;
}

// ---------------------------------------------------------------------------
// A2CAgent

namespace {

// Absolute indices of a host's static configuration bits in the state
// encoding (address, OS, services, processes one-/multi-hots).
std::vector<std::vector<int>> build_host_static_bits(const NetworkScenario& s,
                                                     const EncodingLayout& layout) {
    std::vector<std::vector<int>> out(s.hosts.size());
    for (size_t i = 0; i < s.hosts.size(); ++i) {
        const HostConfig& h = s.hosts[i];
        std::vector<int>& bits = out[i];
        int base = layout.host_offset(static_cast<int>(i)) + EncodingLayout::dynamic_per_host;
        bits.push_back(base + s.subnet_index(h.address.subnet));
        base += layout.subnet_count;
        bits.push_back(base + h.address.host);
        base += layout.max_host_id;
        for (size_t o = 0; o < s.os_set.size(); ++o)
            if (s.os_set[o] == h.os) bits.push_back(base + static_cast<int>(o));
        base += layout.os_count;
        for (size_t v = 0; v < s.services.size(); ++v)
            if (std::binary_search(h.services.begin(), h.services.end(), s.services[v].name))
                bits.push_back(base + static_cast<int>(v));
        base += layout.service_count;
        for (size_t p = 0; p < s.processes.size(); ++p)
            if (std::binary_search(h.processes.begin(), h.processes.end(), s.processes[p]))
                bits.push_back(base + static_cast<int>(p));
    }
    return out;
}

void append_dynamic_bits(const EnvState& state, int host, int offset, std::vector<int>& out) {
    const HostStatus& st = state.status_of(host);
    if (st.compromised) out.push_back(offset + 0);
    if (st.reachable) out.push_back(offset + 1);
    if (st.discovered) out.push_back(offset + 2);
    out.push_back(offset + 3 + static_cast<int>(st.access));
}

}  // namespace

A2CAgent::A2CAgent(const NetworkScenario& scenario, const AgentConfig& config)
    : config_(config),
      layout_(scenario),
      core_([&] {
          std::mt19937_64 init_rng(mix_seed(config.seed, kInitStream));
          return ActorCritic(layout_.state_dim, layout_.action_dim, {64, 32}, {64, 32},
                             config, init_rng);
      }()),
      host_static_bits_(build_host_static_bits(scenario, layout_)) {}

void A2CAgent::state_bits(const EnvState& state, std::vector<int>& out) const {
    out.clear();
    for (int i = 0; i < layout_.host_count; ++i) {
        append_dynamic_bits(state, i, layout_.host_offset(i), out);
        const auto& statics = host_static_bits_[i];
        out.insert(out.end(), statics.begin(), statics.end());
    }
}

void A2CAgent::candidate_step(const EnvState& state, std::span<const Action> candidates,
                              TrajectoryStep& step) const {
    state_bits(state, step.state_bits);
    step.cand_offsets.clear();
    step.cand_bits.clear();
    step.cand_offsets.push_back(0);
    std::vector<int> ones;
    for (const Action& a : candidates) {
        action_one_hots(state.scenario(), layout_, a, ones);
        for (int b : ones) step.cand_bits.push_back(layout_.state_dim + b);
        step.cand_offsets.push_back(static_cast<int>(step.cand_bits.size()));
    }
}

std::vector<double> A2CAgent::policy_distribution(const EnvState& state,
                                                  std::span<const Action> candidates) const {
    if (candidates.empty()) throw std::invalid_argument("empty candidate list");
    TrajectoryStep step;
    candidate_step(state, candidates, step);
    std::vector<double> scores;
    core_.scores(step.state_bits, step, scores);
    return softmax(scores);
}

double A2CAgent::value_estimate(const EnvState& state) const {
    std::vector<int> bits;
    state_bits(state, bits);
    return core_.value(bits);
}

Trajectory A2CAgent::collect_episode(Env& env, std::mt19937_64& policy_rng) {
    Trajectory traj;
    std::vector<double> scores;
    for (int t = 0; t < config_.max_steps; ++t) {
        const EnvState& state = env.state();
        std::vector<Action> cands = valid_actions(state);
        TrajectoryStep step;
        candidate_step(state, cands, step);
        scores.clear();
        core_.scores(step.state_bits, step, scores);
        std::vector<double> probs = softmax(scores);
        int idx = sample_index(probs, canonical_uniform(policy_rng));
        step.chosen = idx;
        step.log_prob = std::log(probs[idx]);
        step.value_estimate = core_.value(step.state_bits);
        StepResult res = env.step(cands[idx]);
        step.reward = res.reward;
        traj.push_back(std::move(step));
        if (res.done) break;
    }
    return traj;
}

LossReport A2CAgent::update(Trajectory& trajectory) {
    return core_.update(trajectory);
}

int A2CAgent::greedy_choice(const EnvState& state, std::span<const Action> candidates) const {
    TrajectoryStep step;
    candidate_step(state, candidates, step);
    std::vector<double> scores;
    core_.scores(step.state_bits, step, scores);
    return argmax_index(scores);
}

// ---------------------------------------------------------------------------
// DoubleAgent

struct DoubleAgent::HostChoice {
    int host_index = 0;
    int first_candidate = 0;
    int count = 0;
};

DoubleAgent::DoubleAgent(const NetworkScenario& scenario, const AgentConfig& config)
    : config_(config),
      layout_(scenario),
      structuring_([&] {
          std::mt19937_64 init_rng(mix_seed(config.seed, kInitStream));
          return ActorCritic(layout_.state_dim, layout_.host_code_dim, {64, 32}, {64, 32},
                             config, init_rng);
      }()),
      exploiting_([&] {
          std::mt19937_64 init_rng(mix_seed(config.seed, kInitStream + 1));
          return ActorCritic(layout_.per_host, kActionTypeCount + layout_.param_dim, {10},
                             {10}, config, init_rng);
      }()),
      host_static_bits_(build_host_static_bits(scenario, layout_)) {}

void DoubleAgent::split_candidates(const EnvState& state, std::span<const Action> candidates,
                                   std::vector<HostChoice>& hosts) const {
    hosts.clear();
    const NetworkScenario& s = state.scenario();
    int i = 0;
    while (i < static_cast<int>(candidates.size())) {
        HostChoice hc;
        hc.host_index = s.host_index(candidates[i].target);
        hc.first_candidate = i;
        int j = i;
        while (j < static_cast<int>(candidates.size()) &&
               candidates[j].target == candidates[i].target)
            ++j;
        hc.count = j - i;
        hosts.push_back(hc);
        i = j;
    }
}

void DoubleAgent::structuring_step(const EnvState& state, const std::vector<HostChoice>& hosts,
                                   TrajectoryStep& out) const {
    out.state_bits.clear();
    for (int i = 0; i < layout_.host_count; ++i) {
        append_dynamic_bits(state, i, layout_.host_offset(i), out.state_bits);
        const auto& statics = host_static_bits_[i];
        out.state_bits.insert(out.state_bits.end(), statics.begin(), statics.end());
    }
    out.cand_offsets.assign(1, 0);
    out.cand_bits.clear();
    const NetworkScenario& s = state.scenario();
    for (const HostChoice& hc : hosts) {
        const Address addr = s.hosts[hc.host_index].address;
        out.cand_bits.push_back(layout_.state_dim + s.subnet_index(addr.subnet));
        out.cand_bits.push_back(layout_.state_dim + layout_.subnet_count + addr.host);
        out.cand_offsets.push_back(static_cast<int>(out.cand_bits.size()));
    }
}

void DoubleAgent::exploiting_step(const EnvState& state, const HostChoice& host,
                                  std::span<const Action> candidates,
                                  TrajectoryStep& out) const {
    const NetworkScenario& s = state.scenario();
    // Shared part: the chosen host's own sub-vector, rebased to zero.
    out.state_bits.clear();
    append_dynamic_bits(state, host.host_index, 0, out.state_bits);
    const int host_base = layout_.host_offset(host.host_index);
    for (int b : host_static_bits_[host.host_index])
        out.state_bits.push_back(b - host_base);
    out.cand_offsets.assign(1, 0);
    out.cand_bits.clear();
    for (int c = 0; c < host.count; ++c) {
        const Action& a = candidates[host.first_candidate + c];
        out.cand_bits.push_back(layout_.per_host + static_cast<int>(a.kind));
        if (a.kind == ActionType::exploit) {
            for (size_t v = 0; v < s.services.size(); ++v)
                if (s.services[v].name == a.parameter)
                    out.cand_bits.push_back(layout_.per_host + kActionTypeCount +
                                            static_cast<int>(v));
        } else if (a.kind == ActionType::privilege_escalation) {
            auto it = std::lower_bound(s.processes.begin(), s.processes.end(), a.parameter);
            if (it != s.processes.end() && *it == a.parameter)
                out.cand_bits.push_back(layout_.per_host + kActionTypeCount +
                                        layout_.service_count +
                                        static_cast<int>(it - s.processes.begin()));
        }
        out.cand_offsets.push_back(static_cast<int>(out.cand_bits.size()));
    }
}

Trajectory DoubleAgent::collect_episode(Env& env, std::mt19937_64& policy_rng) {
    Trajectory struct_traj;
    exploiting_traj_.clear();
    std::vector<HostChoice> hosts;
    std::vector<double> scores;
    for (int t = 0; t < config_.max_steps; ++t) {
        const EnvState& state = env.state();
        std::vector<Action> cands = valid_actions(state);
        split_candidates(state, cands, hosts);

        TrajectoryStep sstep;
        structuring_step(state, hosts, sstep);
        scores.clear();
        structuring_.scores(sstep.state_bits, sstep, scores);
        std::vector<double> sprobs = softmax(scores);
        int hidx = sample_index(sprobs, canonical_uniform(policy_rng));
        sstep.chosen = hidx;
        sstep.log_prob = std::log(sprobs[hidx]);
        sstep.value_estimate = structuring_.value(sstep.state_bits);

        TrajectoryStep estep;
        exploiting_step(state, hosts[hidx], cands, estep);
        scores.clear();
        exploiting_.scores(estep.state_bits, estep, scores);
        std::vector<double> eprobs = softmax(scores);
        int aidx = sample_index(eprobs, canonical_uniform(policy_rng));
        estep.chosen = aidx;
        estep.log_prob = std::log(eprobs[aidx]);
        estep.value_estimate = exploiting_.value(estep.state_bits);

        StepResult res = env.step(cands[hosts[hidx].first_candidate + aidx]);
        sstep.reward = res.reward;
        estep.reward = res.reward;
        struct_traj.push_back(std::move(sstep));
        exploiting_traj_.push_back(std::move(estep));
        if (res.done) break;
    }
    return struct_traj;
}

LossReport DoubleAgent::update(Trajectory& trajectory) {
    // Both agents update from the same shared step rewards.
    compute_returns_and_advantages(exploiting_traj_, config_.gamma, 0.0);
    LossReport s = structuring_.update(trajectory);
    LossReport e = exploiting_.update(exploiting_traj_);
    return {s.actor_loss + e.actor_loss, s.critic_loss + e.critic_loss,
            s.skipped || e.skipped};
}

int DoubleAgent::greedy_choice(const EnvState& state,
                               std::span<const Action> candidates) const {
    std::vector<HostChoice> hosts;
    split_candidates(state, candidates, hosts);
    TrajectoryStep sstep;
    structuring_step(state, hosts, sstep);
    std::vector<double> scores;
    structuring_.scores(sstep.state_bits, sstep, scores);
    int hidx = argmax_index(scores);
    TrajectoryStep estep;
    exploiting_step(state, hosts[hidx], candidates, estep);
    scores.clear();
    exploiting_.scores(estep.state_bits, estep, scores);
    return hosts[hidx].first_candidate + argmax_index(scores);
}

std::vector<double> DoubleAgent::policy_distribution(
    const EnvState& state, std::span<const Action> candidates) const {
    if (candidates.empty()) throw std::invalid_argument("empty candidate list");
    std::vector<HostChoice> hosts;
    split_candidates(state, candidates, hosts);
    TrajectoryStep sstep;
    structuring_step(state, hosts, sstep);
    std::vector<double> scores;
    structuring_.scores(sstep.state_bits, sstep, scores);
    std::vector<double> sprobs = softmax(scores);
    std::vector<double> out(candidates.size(), 0.0);
    for (size_t h = 0; h < hosts.size(); ++h) {
        TrajectoryStep estep;
        exploiting_step(state, hosts[h], candidates, estep);
        scores.clear();
        exploiting_.scores(estep.state_bits, estep, scores);
        std::vector<double> eprobs = softmax(scores);
        for (int c = 0; c < hosts[h].count; ++c)
            out[hosts[h].first_candidate + c] = sprobs[h] * eprobs[c];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training and rollouts

template <typename AgentT>
TrainingLog train(AgentT& agent, Env& env, const AgentConfig& config) {
    TrainingLog log;
    std::mt19937_64 policy_rng(mix_seed(config.seed, kPolicyStream));
    for (int ep = 0; ep < config.episodes; ++ep) {
        env.reset(mix_seed(config.seed, kEpisodeStream + static_cast<std::uint64_t>(ep)));
        Trajectory traj = agent.collect_episode(env, policy_rng);
        double total = 0.0;
        for (const auto& s : traj) total += s.reward;
        bool goal =
            is_terminal(env.state(), env.step_count(), config.max_steps) == TerminalKind::goal;
        compute_returns_and_advantages(traj, config.gamma, 0.0);
        agent.update(traj);
        log.rows.push_back({ep, total, static_cast<int>(traj.size()), goal});
        if (config.stop_when_converged &&
            static_cast<int>(log.rows.size()) >= config.convergence_window) {
            WindowStats ws = window_stats(log, static_cast<int>(log.rows.size()),
                                          config.convergence_window);
            if (ws.goal_rate > config.convergence_goal_rate &&
                ws.mean_steps < config.convergence_max_steps)
                break;
        }
    }
    return log;
}

template TrainingLog train<A2CAgent>(A2CAgent&, Env&, const AgentConfig&);
template TrainingLog train<DoubleAgent>(DoubleAgent&, Env&, const AgentConfig&);

TrainingLog train(Agent& agent, Env& env, const AgentConfig& config) {
    return std::visit([&](auto& a) { return train(a, env, config); }, agent);
}

template <typename AgentT>
EpisodeRecord greedy_rollout(AgentT& agent, Env& env, int max_steps, double gamma) {
    EpisodeRecord rec;
    double discount = 1.0;
    for (int t = 0; t < max_steps; ++t) {
        const EnvState& state = env.state();
        std::vector<Action> cands = valid_actions(state);
        int idx = agent.greedy_choice(state, cands);
        StepResult res = env.step(cands[idx]);
        rec.actions.push_back(cands[idx]);
        rec.rewards.push_back(res.reward);
        rec.total_reward += res.reward;
        rec.discounted_return += discount * res.reward;
        discount *= gamma;
        if (res.outcome.newly_compromised)
            rec.compromised_order.push_back(*res.outcome.newly_compromised);
        if (res.done) {
            rec.goal_reached = true;
            for (const Address& e : env.exit_hosts()) {
                int i = env.scenario().host_index(e);
                if (i >= 0 && res.next_state.status_of(i).access == PrivilegeLevel::root)
                    rec.goal_exit = e;
            }
            break;
        }
    }
    rec.steps = static_cast<int>(rec.actions.size());
    return rec;
}

template EpisodeRecord greedy_rollout<A2CAgent>(A2CAgent&, Env&, int, double);
template EpisodeRecord greedy_rollout<DoubleAgent>(DoubleAgent&, Env&, int, double);

EpisodeRecord greedy_rollout(Agent& agent, Env& env, int max_steps, double gamma) {
    return std::visit([&](auto& a) { return greedy_rollout(a, env, max_steps, gamma); }, agent);
}

std::string_view to_string(AgentKind k) {
    return k == AgentKind::a2c ? "a2c" : "double";
}

std::optional<AgentKind> parse_agent_kind(std::string_view name) {
    if (name == "a2c") return AgentKind::a2c;
    if (name == "double") return AgentKind::double_agent;
    return std::nullopt;
}

Agent make_agent(AgentKind kind, const NetworkScenario& scenario, const AgentConfig& config) {
    if (kind == AgentKind::a2c) return Agent(std::in_place_type<A2CAgent>, scenario, config);
    return Agent(std::in_place_type<DoubleAgent>, scenario, config);
}

// ---------------------------------------------------------------------------
// Parameter snapshots

namespace {

void write_net(std::ostream& out, const std::string& name, const MLP& net) {
    out << "net " << name << " layers " << net.layer_sizes.size();
    for (int d : net.layer_sizes) out << ' ' << d;
    out << '\n';
    out << std::setprecision(17);
    for (size_t l = 0; l < net.weights.size(); ++l) {
        for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
                if (c) out << ' ';
                out << net.weights[l](r, c);
            }
            out << '\n';
        }
        for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
            if (r) out << ' ';
            out << net.biases[l][r];
        }
        out << '\n';
    }
}

MLP read_net(std::istream& in, std::string& name) {
    std::string tok;
    in >> tok;
    if (tok != "net") throw std::runtime_error("snapshot: expected 'net'");
    in >> name >> tok;
    if (tok != "layers") throw std::runtime_error("snapshot: expected 'layers'");
    size_t count = 0;
    in >> count;
    MLP net;
    net.layer_sizes.resize(count);
    for (auto& d : net.layer_sizes) in >> d;
    for (size_t l = 0; l + 1 < count; ++l) {
        Eigen::MatrixXd w(net.layer_sizes[l + 1], net.layer_sizes[l]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) in >> w(r, c);
        Eigen::VectorXd b(net.layer_sizes[l + 1]);
        for (Eigen::Index r = 0; r < b.size(); ++r) in >> b[r];
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    if (!in) throw std::runtime_error("snapshot: truncated parameter data");
    return net;
}

}  // namespace

void save_agent(const Agent& agent, const AgentConfig& config, std::ostream& out) {
    out << "exfilpath-agent v1\n";
    const bool is_a2c = std::holds_alternative<A2CAgent>(agent);
    out << "kind " << (is_a2c ? "a2c" : "double") << '\n';
    out << std::setprecision(17);
    out << "learning_rate " << config.learning_rate << '\n';
    out << "gamma " << config.gamma << '\n';
    out << "episodes " << config.episodes << '\n';
    out << "max_steps " << config.max_steps << '\n';
    out << "seed " << config.seed << '\n';
    out << "entropy_coef " << config.entropy_coef << '\n';
    out << "grad_clip " << config.grad_clip << '\n';
    if (is_a2c) {
        const auto& a = std::get<A2CAgent>(agent);
        out << "nets 2\n";
        write_net(out, "actor", a.core().actor());
        write_net(out, "critic", a.core().critic());
    } else {
        const auto& d = std::get<DoubleAgent>(agent);
        out << "nets 4\n";
        write_net(out, "structuring_actor", d.structuring().actor());
        write_net(out, "structuring_critic", d.structuring().critic());
        write_net(out, "exploiting_actor", d.exploiting().actor());
        write_net(out, "exploiting_critic", d.exploiting().critic());
    }
}

void save_agent_file(const Agent& agent, const AgentConfig& config,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::system_error(errno, std::generic_category(),
                                      "cannot open " + path.string());
    save_agent(agent, config, out);
}

AgentSnapshot load_agent_snapshot(std::istream& in) {
    AgentSnapshot snap;
    std::string line;
    std::getline(in, line);
    if (line != "exfilpath-agent v1") throw std::runtime_error("snapshot: bad header");
    std::string key, value;
    in >> key >> value;
    if (key != "kind") throw std::runtime_error("snapshot: expected kind");
    auto kind = parse_agent_kind(value);
    if (!kind) throw std::runtime_error("snapshot: unknown agent kind");
    snap.kind = *kind;
    in >> key >> snap.config.learning_rate;
    in >> key >> snap.config.gamma;
    in >> key >> snap.config.episodes;
    in >> key >> snap.config.max_steps;
    in >> key >> snap.config.seed;
    in >> key >> snap.config.entropy_coef;
    in >> key >> snap.config.grad_clip;
    int nets = 0;
    in >> key >> nets;
    if (key != "nets") throw std::runtime_error("snapshot: expected nets");
    for (int i = 0; i < nets; ++i) {
        std::string name;
        MLP net = read_net(in, name);
        snap.nets.emplace_back(std::move(name), std::move(net));
    }
    return snap;
}

AgentSnapshot load_agent_snapshot_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::system_error(errno, std::generic_category(),
                                     "cannot open " + path.string());
    return load_agent_snapshot(in);
}

namespace {

void assign_net(MLP& dst, const MLP& src, const std::string& name) {
    if (dst.layer_sizes != src.layer_sizes)
        throw std::runtime_error("snapshot: net '" + name +
                                 "' does not match the scenario's dimensions");
    dst.weights = src.weights;
    dst.biases = src.biases;
}

}  // namespace

Agent restore_agent(const AgentSnapshot& snapshot, const NetworkScenario& scenario) {
    Agent agent = make_agent(snapshot.kind, scenario, snapshot.config);
    auto find = [&](const std::string& name) -> const MLP& {
        for (const auto& [n, net] : snapshot.nets)
            if (n == name) return net;
        throw std::runtime_error("snapshot: missing net '" + name + "'");
    };
    if (snapshot.kind == AgentKind::a2c) {
        auto& a = std::get<A2CAgent>(agent);
        assign_net(a.core().actor(), find("actor"), "actor");
        assign_net(a.core().critic(), find("critic"), "critic");
    } else {
        auto& d = std::get<DoubleAgent>(agent);
        assign_net(d.structuring().actor(), find("structuring_actor"), "structuring_actor");
        assign_net(d.structuring().critic(), find("structuring_critic"), "structuring_critic");
        assign_net(d.exploiting().actor(), find("exploiting_actor"), "exploiting_actor");
        assign_net(d.exploiting().critic(), find("exploiting_critic"), "exploiting_critic");
    }
    return agent;
}

}  // namespace exfil
