#include "dlbac/neuralnet.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "dlbac/dataset.h"
#include "dlbac/error.h"
#include "dlbac/rng.h"

namespace dlbac {
namespace {

// Largest double below 1 and smallest positive normal double: saturated
// sigmoid outputs are pinned inside the open unit interval.
constexpr double kMaxProbability = 1.0 - 0x1.0p-53;
constexpr double kMinProbability = std::numeric_limits<double>::min();

double sigmoid(double z) {
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return std::clamp(p, kMinProbability, kMaxProbability);
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

// Pre-activations of every layer and the post-activations feeding each.
struct Trace {
  std::vector<Eigen::MatrixXd> inputs;  // inputs[l] feeds layer l
  std::vector<Eigen::MatrixXd> pre;     // pre[l] = W_l inputs[l] + b_l
  Eigen::MatrixXd probs;
};

Trace run_forward(const std::vector<Layer>& layers, const Eigen::MatrixXd& x) {
  Trace trace;
  trace.inputs.reserve(layers.size());
  trace.pre.reserve(layers.size());
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].weights * a;
    z.colwise() += layers[l].bias;
    trace.inputs.push_back(std::move(a));
    if (l + 1 < layers.size()) {
      a = z.cwiseMax(0.0);
    } else {
      trace.probs = sigmoid(z);
    }
    trace.pre.push_back(std::move(z));
  }
  return trace;
}

// Back-propagates d(objective)/d(output pre-activation) into parameters
// (when grads != nullptr) and returns d(objective)/d(input).
Eigen::MatrixXd run_backward(const std::vector<Layer>& layers,
                             const Trace& trace, Eigen::MatrixXd delta,
                             ParameterSet* grads) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (grads != nullptr) {
      grads->layers[l].weights.noalias() = delta * trace.inputs[l].transpose();
      grads->layers[l].bias = delta.rowwise().sum();
    }
    Eigen::MatrixXd upstream = layers[l].weights.transpose() * delta;
    if (l > 0) {
      const Eigen::MatrixXd& z = trace.pre[l - 1];
      upstream = upstream.cwiseProduct(
          z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    }
    delta = std::move(upstream);
  }
  return delta;
}

Eigen::MatrixXd to_column(std::span<const double> x) {
  Eigen::MatrixXd col(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) col(static_cast<Eigen::Index>(i), 0) = x[i];
  return col;
}

void check_input(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_width()) {
    throw ShapeError("input width " + std::to_string(x.size()) +
                     " does not match network width " +
                     std::to_string(net.input_width()));
  }
  for (const double v : x) {
    if (!std::isfinite(v)) throw Error("non-finite network input");
  }
}

// d loss / d (output pre-activation) for one output; zero where the clamp
// in `loss` is active.
double output_delta(double p, double y, ClassWeights w) {
  if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
  return -w.grant * y * (1.0 - p) + w.deny * (1.0 - y) * p;
}

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

void NetworkConfig::validate() const {
  if (input_width == 0 || num_ops == 0) {
    throw ConfigError("network input width and output count must be positive");
  }
  for (const auto w : hidden_layers) {
    if (w == 0) throw ConfigError("hidden layer widths must be positive");
  }
}

Network::Network(NetworkConfig config, std::vector<Layer> layers)
    : config_(std::move(config)), layers_(std::move(layers)) {
  config_.validate();
  if (layers_.size() != config_.hidden_layers.size() + 1) {
    throw ShapeError("layer count does not match the configuration");
  }
  std::size_t in = config_.input_width;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::size_t out = l < config_.hidden_layers.size()
                                ? config_.hidden_layers[l]
                                : config_.num_ops;
    if (static_cast<std::size_t>(layers_[l].weights.rows()) != out ||
        static_cast<std::size_t>(layers_[l].weights.cols()) != in ||
        static_cast<std::size_t>(layers_[l].bias.size()) != out) {
      throw ShapeError("layer " + std::to_string(l) + " has the wrong shape");
    }
    in = out;
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return n;
}

std::vector<double> Network::forward(std::span<const double> x) const {
  check_input(*this, x);
  const Eigen::MatrixXd probs = forward_batch(to_column(x));
  return std::vector<double>(probs.data(), probs.data() + probs.size());
}

Eigen::MatrixXd Network::forward_batch(const Eigen::MatrixXd& inputs) const {
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weights * a;
    z.colwise() += layers_[l].bias;
    a = l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : sigmoid(z);
  }
  return a;
}

bool Network::operator==(const Network& other) const {
  if (config_ != other.config_ || layers_.size() != other.layers_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weights != other.layers_[l].weights ||
        layers_[l].bias != other.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

Network init_network(const NetworkConfig& config) {
  config.validate();
  SplitMix64 rng(config.init_seed);
  std::vector<Layer> layers;
  std::size_t in = config.input_width;
  const std::size_t count = config.hidden_layers.size() + 1;
  for (std::size_t l = 0; l < count; ++l) {
    const std::size_t out =
        l < config.hidden_layers.size() ? config.hidden_layers[l] : config.num_ops;
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (std::size_t r = 0; r < out; ++r) {
      for (std::size_t c = 0; c < in; ++c) {
        layer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            scale * rng.normal();
      }
    }
    layers.push_back(std::move(layer));
    in = out;
  }
  return Network(config, std::move(layers));
}

double loss(std::span<const double> probs, std::span<const std::uint8_t> labels,
            ClassWeights weights) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw ShapeError("probabilities and labels differ in length");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double p = std::clamp(probs[k], kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double y = labels[k];
    total -= weights.grant * y * std::log(p) +
             weights.deny * (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

ParameterSet ParameterSet::zeros_like(const Network& net) {
  ParameterSet set;
  for (const auto& layer : net.layers()) {
    set.layers.push_back(
        {Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
         Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return set;
}

std::vector<double> ParameterSet::flatten() const {
  std::vector<double> out;
  for (const auto& layer : layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        out.push_back(layer.weights(r, c));
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out.push_back(layer.bias(r));
  }
  return out;
}

double backward_batch(const Network& net, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& labels, ClassWeights weights,
                      ParameterSet& grads) {
  const Eigen::Index batch = inputs.cols();
  const Eigen::Index ops = static_cast<Eigen::Index>(net.num_ops());
  if (static_cast<std::size_t>(inputs.rows()) != net.input_width() ||
      labels.rows() != ops || labels.cols() != batch || batch == 0) {
    throw ShapeError("batch shapes do not match the network");
  }
  const Trace trace = run_forward(net.layers(), inputs);
  const double scale = 1.0 / static_cast<double>(ops * batch);
  Eigen::MatrixXd delta(ops, batch);
  double total = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    for (Eigen::Index k = 0; k < ops; ++k) {
      const double p = trace.probs(k, j);
      const double y = labels(k, j);
      const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
      total -= weights.grant * y * std::log(pc) +
               weights.deny * (1.0 - y) * std::log(1.0 - pc);
      delta(k, j) = output_delta(p, y, weights) * scale;
    }
  }
  if (grads.layers.size() != net.layers().size()) {
    grads = ParameterSet::zeros_like(net);
  }
  run_backward(net.layers(), trace, std::move(delta), &grads);
  return total * scale;
}

ParameterSet backward(const Network& net, std::span<const double> x,
                      std::span<const std::uint8_t> labels,
                      ClassWeights weights) {
  check_input(net, x);
  if (labels.size() != net.num_ops()) throw ShapeError("label count mismatch");
  Eigen::MatrixXd y(static_cast<Eigen::Index>(labels.size()), 1);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    y(static_cast<Eigen::Index>(k), 0) = labels[k];
  }
  ParameterSet grads = ParameterSet::zeros_like(net);
  backward_batch(net, to_column(x), y, weights, grads);
  return grads;
}

std::vector<double> input_gradient(const Network& net,
                                   std::span<const double> x,
                                   std::size_t op_index) {
  check_input(net, x);
  if (op_index >= net.num_ops()) {
    throw NotFoundError("operation " + std::to_string(op_index) + " out of range");
  }
  const Trace trace = run_forward(net.layers(), to_column(x));
  Eigen::MatrixXd delta =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.num_ops()), 1);
  const double p = trace.probs(static_cast<Eigen::Index>(op_index), 0);
  delta(static_cast<Eigen::Index>(op_index), 0) = p * (1.0 - p);
  const Eigen::MatrixXd dx = run_backward(net.layers(), trace, std::move(delta), nullptr);
  return std::vector<double>(dx.data(), dx.data() + dx.size());
}

AdamState AdamState::for_network(const Network& net) {
  return {ParameterSet::zeros_like(net), ParameterSet::zeros_like(net), 0};
}

void adam_step(Network& net, const ParameterSet& grads, AdamState& state,
               double learning_rate) {
  auto& layers = net.mutable_layers();
  if (grads.layers.size() != layers.size() ||
      state.first_moment.layers.size() != layers.size()) {
    throw ShapeError("gradient or optimizer state does not match the network");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double correct2 = 1.0 - std::pow(AdamState::kBeta2, t);
  const auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = AdamState::kBeta1 * m + (1.0 - AdamState::kBeta1) * g;
    v = AdamState::kBeta2 * v + (1.0 - AdamState::kBeta2) * g.cwiseProduct(g);
    param.array() -= learning_rate * (m.array() / correct1) /
                     ((v.array() / correct2).sqrt() + AdamState::kEpsilon);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights, grads.layers[l].weights,
           state.first_moment.layers[l].weights,
           state.second_moment.layers[l].weights);
    update(layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias);
  }
}

std::string serialize_model(const Network& net) {
  std::ostringstream out;
  const auto& cfg = net.config();
  out << "dlbac-model v1\n";
  out << "widths " << cfg.input_width;
  for (const auto w : cfg.hidden_layers) out << " " << w;
  out << " " << cfg.num_ops << "\n";
  out << "init_seed " << cfg.init_seed << "\n";
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Layer& layer = net.layers()[l];
    out << "layer " << l << " " << layer.weights.rows() << " "
        << layer.weights.cols() << "\n";
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      out << "w";
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        out << " " << hex(layer.weights(r, c));
      }
      out << "\n";
    }
    out << "b";
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out << " " << hex(layer.bias(r));
    out << "\n";
  }
  out << "end\n";
  return out.str();
}

Network parse_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t ln = 0;
  const auto next = [&]() -> std::vector<std::string> {
    while (std::getline(in, line)) {
      ++ln;
      std::istringstream fields(line);
      std::vector<std::string> toks;
      for (std::string tok; fields >> tok;) toks.push_back(tok);
      if (!toks.empty()) return toks;
    }
    throw ParseError(ln, "truncated model file");
  };
  const auto to_size = [&](const std::string& tok) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
    if (tok.empty() || *end != '\0' || tok[0] == '-') {
      throw ParseError(ln, "expected an integer, got '" + tok + "'");
    }
    return static_cast<std::size_t>(v);
  };
  const auto to_double = [&](const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0' || !std::isfinite(v)) {
      throw ParseError(ln, "expected a finite float literal, got '" + tok + "'");
    }
    return v;
  };

  auto toks = next();
  if (toks.size() != 2 || toks[0] != "dlbac-model") {
    throw ParseError(ln, "missing 'dlbac-model' header");
  }
  if (toks[1] != "v1") throw ParseError(ln, "unsupported model version '" + toks[1] + "'");
  toks = next();
  if (toks.size() < 3 || toks[0] != "widths") throw ParseError(ln, "expected widths line");
  std::vector<std::size_t> widths;
  for (std::size_t i = 1; i < toks.size(); ++i) widths.push_back(to_size(toks[i]));
  NetworkConfig cfg;
  cfg.input_width = widths.front();
  cfg.num_ops = widths.back();
  cfg.hidden_layers.assign(widths.begin() + 1, widths.end() - 1);
  toks = next();
  if (toks.size() != 2 || toks[0] != "init_seed") throw ParseError(ln, "expected init_seed line");
  cfg.init_seed = to_size(toks[1]);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ParseError(ln, e.what());
  }

  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t rows = widths[l + 1];
    const std::size_t cols = widths[l];
    toks = next();
    if (toks.size() != 4 || toks[0] != "layer" || to_size(toks[1]) != l ||
        to_size(toks[2]) != rows || to_size(toks[3]) != cols) {
      throw ParseError(ln, "expected 'layer " + std::to_string(l) + " " +
                               std::to_string(rows) + " " + std::to_string(cols) + "'");
    }
    Layer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (std::size_t r = 0; r < rows; ++r) {
      toks = next();
      if (toks.size() != cols + 1 || toks[0] != "w") {
        throw ParseError(ln, "weight row with wrong length");
      }
      for (std::size_t c = 0; c < cols; ++c) {
        layer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            to_double(toks[c + 1]);
      }
    }
    toks = next();
    if (toks.size() != rows + 1 || toks[0] != "b") {
      throw ParseError(ln, "bias row with wrong length");
    }
    for (std::size_t r = 0; r < rows; ++r) {
      layer.bias(static_cast<Eigen::Index>(r)) = to_double(toks[r + 1]);
    }
    layers.push_back(std::move(layer));
  }
  toks = next();
  if (toks.size() != 1 || toks[0] != "end") throw ParseError(ln, "expected 'end'");
  return Network(cfg, std::move(layers));
}

void save_model(const Network& net, const std::string& path) {
  write_file(path, serialize_model(net));
}

Network load_model(const std::string& path) {
  try {
    return parse_model(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.what());
  }
}

}  // namespace dlbac
