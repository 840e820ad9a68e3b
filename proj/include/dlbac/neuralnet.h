#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dlbac {

struct NetworkConfig {
  std::size_t input_width = 0;
  std::vector<std::size_t> hidden_layers = {256, 128, 64, 32};
  std::size_t num_ops = 0;
  std::uint64_t init_seed = 1;

  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// Affine map out = weights * in + bias; weights is (out x in).
struct Layer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

// Feedforward network with rectifier hidden layers and one sigmoid output per
// operation. Immutable once trained; forward passes are const and
// thread-safe.
class Network {
 public:
  Network(NetworkConfig config, std::vector<Layer> layers);

  const NetworkConfig& config() const { return config_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  std::size_t input_width() const { return config_.input_width; }
  std::size_t num_ops() const { return config_.num_ops; }
  std::size_t parameter_count() const;

  // Grant probabilities, one per operation. Throws ShapeError on width
  // mismatch and Error on non-finite input.
  std::vector<double> forward(std::span<const double> x) const;

  // Column-per-sample batch: inputs (input_width x B) -> (num_ops x B).
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  bool operator==(const Network& other) const;

 private:
  NetworkConfig config_;
  std::vector<Layer> layers_;
};

// He-normal weights (std = sqrt(2 / fan_in)), zero biases; draws are taken
// layer by layer in row-major order from SplitMix64(init_seed).
Network init_network(const NetworkConfig& config);

struct ClassWeights {
  double grant = 1.0;
  double deny = 1.0;

  bool operator==(const ClassWeights&) const = default;
};

inline constexpr double kProbabilityClamp = 1e-12;

// Mean over operations of
//   -[w_grant * y * ln p + w_deny * (1 - y) * ln(1 - p)],
// with p clamped to [1e-12, 1 - 1e-12].
double loss(std::span<const double> probs, std::span<const std::uint8_t> labels,
            ClassWeights weights);

// Parameter-shaped container used for gradients and Adam moments.
struct ParameterSet {
  std::vector<Layer> layers;

  static ParameterSet zeros_like(const Network& net);
  std::vector<double> flatten() const;
};

// Exact gradient of `loss` for one sample.
ParameterSet backward(const Network& net, std::span<const double> x,
                      std::span<const std::uint8_t> labels,
                      ClassWeights weights);

// Batch version: fills `grads` with the gradient of the mean per-sample loss
// over the columns of `inputs`; returns that mean loss. `labels` is
// (num_ops x B) with entries 0 or 1.
double backward_batch(const Network& net, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& labels, ClassWeights weights,
                      ParameterSet& grads);

// d probability[op] / d x, through the same graph as forward.
std::vector<double> input_gradient(const Network& net,
                                   std::span<const double> x,
                                   std::size_t op_index);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  ParameterSet first_moment;
  ParameterSet second_moment;
  std::uint64_t step = 0;

  static AdamState for_network(const Network& net);
};

// One bias-corrected Adam update of every parameter.
void adam_step(Network& net, const ParameterSet& grads, AdamState& state,
               double learning_rate);

// `dlbac-model v1` text with hexadecimal float literals (bit-exact).
std::string serialize_model(const Network& net);
Network parse_model(std::string_view text);
void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);

}  // namespace dlbac
