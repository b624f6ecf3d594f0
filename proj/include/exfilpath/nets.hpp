#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace exfil {

// Fully connected net: tanh hidden activations, linear scalar output.
struct MLP {
    std::vector<int> layer_sizes;           // [input, hidden..., 1]
    std::vector<Eigen::MatrixXd> weights;   // weights[l]: sizes[l+1] x sizes[l]
    std::vector<Eigen::VectorXd> biases;

    // Uniform init in [-1/sqrt(n_in), 1/sqrt(n_in)] per layer.
    static MLP make(std::vector<int> layer_sizes, std::mt19937_64& rng);

    int input_dim() const { return layer_sizes.front(); }
    int parameter_count() const;
    double forward(const Eigen::VectorXd& input) const;
};

struct MLPGrads {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    explicit MLPGrads(const MLP& net);
    void set_zero();
    bool all_finite() const;
    double squared_norm() const;
    void scale(double factor);
};

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class AdamOptimizer {
public:
    AdamOptimizer(const MLP& net, AdamConfig config);
    void step(MLP& net, const MLPGrads& grads);
    std::int64_t steps_taken() const { return t_; }

private:
    AdamConfig config_;
    std::int64_t t_ = 0;
    std::vector<Eigen::MatrixXd> m_w_, v_w_;
    std::vector<Eigen::VectorXd> m_b_, v_b_;
};

// Inputs to the nets are sparse binary vectors; they are passed around as
// the sorted indices of their set bits.
struct MLPActivations {
    std::vector<Eigen::VectorXd> hidden;  // post-tanh, per hidden layer
};

// Layer-1 preactivation b1 + sum of W1 columns at the set bits. Candidates
// at one decision point share this between them.
Eigen::VectorXd mlp_layer1_pre(const MLP& net, std::span<const int> bits);

// Scalar output given a precomputed layer-1 preactivation plus extra set
// bits (the candidate's own encoding). acts may be null.
double mlp_forward_from_pre(const MLP& net, const Eigen::VectorXd& pre1,
                            std::span<const int> extra_bits, MLPActivations* acts);

double mlp_forward_bits(const MLP& net, std::span<const int> bits, MLPActivations* acts);

// Backprop of dLoss/d(output) = dout; accumulates into grads. bits must be
// the union of the bits used in the forward pass.
void mlp_backward_bits(const MLP& net, const MLPActivations& acts,
                       std::span<const int> shared_bits, std::span<const int> extra_bits,
                       double dout, MLPGrads& grads);

std::vector<double> softmax(std::span<const double> scores);

// Lowest index wins ties.
int argmax_index(std::span<const double> values);

// Inverse-CDF sample given u in [0, 1).
int sample_index(std::span<const double> probabilities, double u);

// R_t = r_t + gamma * R_{t+1}, seeded with terminal_value past the end.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma,
                                       double terminal_value);

}  // namespace exfil
