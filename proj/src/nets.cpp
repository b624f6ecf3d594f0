#include "exfilpath/nets.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace exfil {

namespace {

double canonical(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

MLP MLP::make(std::vector<int> layer_sizes, std::mt19937_64& rng) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("MLP needs at least two layers");
    for (int n : layer_sizes)
        if (n <= 0) throw std::invalid_argument("MLP layer sizes must be positive");
    MLP net;
    net.layer_sizes = std::move(layer_sizes);
    for (size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        const int in = net.layer_sizes[l];
        const int out = net.layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Eigen::MatrixXd w(out, in);
        for (int i = 0; i < out; ++i)
            for (int j = 0; j < in; ++j) w(i, j) = (2.0 * canonical(rng) - 1.0) * bound;
        Eigen::VectorXd b(out);
        for (int i = 0; i < out; ++i) b[i] = (2.0 * canonical(rng) - 1.0) * bound;
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

int MLP::parameter_count() const {
    int n = 0;
    for (size_t l = 0; l < weights.size(); ++l)
        n += static_cast<int>(weights[l].size() + biases[l].size());
    return n;
}

double MLP::forward(const Eigen::VectorXd& input) const {
    if (input.size() != weights.front().cols())
        throw std::invalid_argument("MLP input dimension mismatch");
    Eigen::VectorXd x = input;
    for (size_t l = 0; l < weights.size(); ++l) {
        Eigen::VectorXd pre = weights[l] * x + biases[l];
        if (l + 1 < weights.size())
            x = pre.array().tanh();
        else
            x = pre;
    }
    return x[0];
}

MLPGrads::MLPGrads(const MLP& net) {
    for (size_t l = 0; l < net.weights.size(); ++l) {
        weights.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        biases.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    }
}

void MLPGrads::set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
}

bool MLPGrads::all_finite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

double MLPGrads::squared_norm() const {
    double n = 0;
    for (const auto& w : weights) n += w.squaredNorm();
    for (const auto& b : biases) n += b.squaredNorm();
    return n;
}

void MLPGrads::scale(double factor) {
    for (auto& w : weights) w *= factor;
    for (auto& b : biases) b *= factor;
}

AdamOptimizer::AdamOptimizer(const MLP& net, AdamConfig config) : config_(config) {
    for (size_t l = 0; l < net.weights.size(); ++l) {
        m_w_.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        v_w_.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        m_b_.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
        v_b_.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    }
}

void AdamOptimizer::step(MLP& net, const MLPGrads& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (size_t l = 0; l < net.weights.size(); ++l) {
        m_w_[l] = config_.beta1 * m_w_[l] + (1.0 - config_.beta1) * grads.weights[l];
        v_w_[l] = config_.beta2 * v_w_[l].array().matrix() +
                  (1.0 - config_.beta2) * grads.weights[l].array().square().matrix();
        net.weights[l].array() -=
            config_.learning_rate * (m_w_[l].array() / c1) /
            ((v_w_[l].array() / c2).sqrt() + config_.epsilon);
        m_b_[l] = config_.beta1 * m_b_[l] + (1.0 - config_.beta1) * grads.biases[l];
        v_b_[l] = config_.beta2 * v_b_[l].array().matrix() +
                  (1.0 - config_.beta2) * grads.biases[l].array().square().matrix();
        net.biases[l].array() -=
            config_.learning_rate * (m_b_[l].array() / c1) /
            ((v_b_[l].array() / c2).sqrt() + config_.epsilon);
    }
}

Eigen::VectorXd mlp_layer1_pre(const MLP& net, std::span<const int> bits) {
    Eigen::VectorXd pre = net.biases[0];
    for (int b : bits) {
        assert(b >= 0 && b < net.weights[0].cols());
        pre += net.weights[0].col(b);
    }
    return pre;
}

double mlp_forward_from_pre(const MLP& net, const Eigen::VectorXd& pre1,
                            std::span<const int> extra_bits, MLPActivations* acts) {
    Eigen::VectorXd pre = pre1;
    for (int b : extra_bits) pre += net.weights[0].col(b);
    const size_t layers = net.weights.size();
    if (acts) acts->hidden.resize(layers - 1);
    if (layers == 1) return pre[0];
    Eigen::VectorXd h = pre.array().tanh();
    if (acts) acts->hidden[0] = h;
    for (size_t l = 1; l + 1 < layers; ++l) {
        h = (net.weights[l] * h + net.biases[l]).array().tanh();
        if (acts) acts->hidden[l] = h;
    }
    return (net.weights.back() * h + net.biases.back())[0];
}

double mlp_forward_bits(const MLP& net, std::span<const int> bits, MLPActivations* acts) {
    return mlp_forward_from_pre(net, mlp_layer1_pre(net, {}), bits, acts);
}

void mlp_backward_bits(const MLP& net, const MLPActivations& acts,
                       std::span<const int> shared_bits, std::span<const int> extra_bits,
                       double dout, MLPGrads& grads) {
    const size_t layers = net.weights.size();
    Eigen::VectorXd d = Eigen::VectorXd::Constant(1, dout);
    for (size_t l = layers; l-- > 0;) {
        if (l > 0) {
            grads.weights[l].noalias() += d * acts.hidden[l - 1].transpose();
            grads.biases[l] += d;
            Eigen::VectorXd dh = net.weights[l].transpose() * d;
            d = (1.0 - acts.hidden[l - 1].array().square()) * dh.array();
        } else {
            grads.biases[0] += d;
            for (int b : shared_bits) grads.weights[0].col(b) += d;
            for (int b : extra_bits) grads.weights[0].col(b) += d;
        }
    }
}

std::vector<double> softmax(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("softmax over empty score list");
    double max = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double sum = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - max);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

int argmax_index(std::span<const double> values) {
    int best = 0;
    for (size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = static_cast<int>(i);
    return best;
}

int sample_index(std::span<const double> probabilities, double u) {
    double cum = 0.0;
    for (size_t i = 0; i < probabilities.size(); ++i) {
        cum += probabilities[i];
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probabilities.size()) - 1;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma,
                                       double terminal_value) {
    std::vector<double> returns(rewards.size());
    double acc = terminal_value;
    for (size_t i = rewards.size(); i-- > 0;) {
        acc = rewards[i] + gamma * acc;
        returns[i] = acc;
    }
    return returns;
}

}  // namespace exfil
