#include "dlbac/train.h"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dlbac/error.h"
#include "dlbac/rng.h"

namespace dlbac {

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (lr_decay_every == 0 || !(lr_decay_factor > 0.0)) {
    throw ConfigError("learning-rate decay settings must be positive");
  }
  if (epochs == 0 || batch_size == 0) {
    throw ConfigError("epochs and batch_size must be positive");
  }
  if (early_stop_patience == 0) throw ConfigError("patience must be at least 1");
  if (!(class_weights.grant > 0.0) || !(class_weights.deny > 0.0)) {
    throw ConfigError("class weights must be positive");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("threshold must lie in (0, 1)");
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val_fraction must lie in [0, 1)");
  }
}

double learning_rate_at(const TrainConfig& config, std::size_t epoch) {
  const auto drops = static_cast<double>(epoch / config.lr_decay_every);
  return config.lr0 / std::pow(config.lr_decay_factor, drops);
}

bool EarlyStopping::observe(std::size_t epoch, double loss) {
  if (loss < best_loss_) {
    best_loss_ = loss;
    best_epoch_ = epoch;
    stale_epochs_ = 0;
    return true;
  }
  ++stale_epochs_;
  return false;
}

std::string report_csv(const TrainReport& report) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,learning_rate\n";
  char buf[128];
  for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.9f,%.9f,%.9g\n", e, report.train_loss[e],
                  report.val_loss[e], report.learning_rate[e]);
    out << buf;
  }
  return out.str();
}

EncodedData encode_dataset(const Encoder& encoder, const Dataset& dataset) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  EncodedData data{Eigen::MatrixXd(encoder.width(), n),
                   Eigen::MatrixXd(dataset.num_ops(), n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& t = dataset[static_cast<std::size_t>(j)];
    encoder.encode_into(t.umeta, t.rmeta,
                        std::span<double>(data.features.col(j).data(),
                                          encoder.width()));
    for (std::size_t k = 0; k < t.ops.size(); ++k) {
      data.labels(static_cast<Eigen::Index>(k), j) = t.ops[k];
    }
  }
  return data;
}

double dataset_loss(const Network& net, const EncodedData& data,
                    ClassWeights weights) {
  const Eigen::MatrixXd probs = net.forward_batch(data.features);
  double total = 0.0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    for (Eigen::Index k = 0; k < probs.rows(); ++k) {
      const double p = std::clamp(probs(k, j), kProbabilityClamp,
                                  1.0 - kProbabilityClamp);
      const double y = data.labels(k, j);
      total -= weights.grant * y * std::log(p) +
               weights.deny * (1.0 - y) * std::log(1.0 - p);
    }
  }
  return total / static_cast<double>(probs.size());
}

TrainResult train(Network net, const Dataset& train_set, const Encoder& encoder,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw ShapeError("training set is empty");
  if (encoder.width() != net.input_width() ||
      train_set.num_ops() != net.num_ops()) {
    throw ShapeError("dataset, encoder and network disagree on shape");
  }
  const EncodedData all = encode_dataset(encoder, train_set);

  SplitMix64 root(config.shuffle_seed);
  SplitMix64 carve_rng = root.fork(1);
  SplitMix64 epoch_rng = root.fork(2);

  std::vector<Eigen::Index> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  carve_rng.shuffle(order);
  const auto num_val = static_cast<std::size_t>(
      std::llround(config.val_fraction * static_cast<double>(order.size())));
  std::vector<Eigen::Index> val_idx(order.begin(), order.begin() + num_val);
  std::vector<Eigen::Index> fit_idx(order.begin() + num_val, order.end());
  if (fit_idx.empty()) {
    fit_idx = val_idx;
    val_idx.clear();
  }
  EncodedData fit{all.features(Eigen::all, fit_idx), all.labels(Eigen::all, fit_idx)};
  EncodedData val{all.features(Eigen::all, val_idx), all.labels(Eigen::all, val_idx)};

  AdamState adam = AdamState::for_network(net);
  ParameterSet grads = ParameterSet::zeros_like(net);
  EarlyStopping stopper(config.early_stop_patience);
  Network best = net;
  TrainReport report;

  std::vector<Eigen::Index> perm(fit_idx.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Eigen::Index>(i);
  Eigen::MatrixXd batch_x, batch_y;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = learning_rate_at(config, epoch);
    epoch_rng.shuffle(perm);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < perm.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, perm.size());
      const std::vector<Eigen::Index> cols(perm.begin() + start, perm.begin() + end);
      batch_x = fit.features(Eigen::all, cols);
      batch_y = fit.labels(Eigen::all, cols);
      const double batch_loss =
          backward_batch(net, batch_x, batch_y, config.class_weights, grads);
      loss_sum += batch_loss * static_cast<double>(end - start);
      adam_step(net, grads, adam, lr);
    }
    const double train_loss = loss_sum / static_cast<double>(perm.size());
    const double monitored = val_idx.empty()
                                 ? dataset_loss(net, fit, config.class_weights)
                                 : dataset_loss(net, val, config.class_weights);
    report.train_loss.push_back(train_loss);
    report.val_loss.push_back(monitored);
    report.learning_rate.push_back(lr);
    report.stopped_epoch = epoch;
    if (stopper.observe(epoch, monitored)) best = net;
    if (stopper.should_stop()) break;
  }
  report.best_epoch = stopper.best_epoch();
  return {std::move(best), std::move(report)};
}

}  // namespace dlbac
