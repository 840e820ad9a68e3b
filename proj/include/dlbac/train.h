#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dlbac/dataset.h"
#include "dlbac/encoding.h"
#include "dlbac/neuralnet.h"

namespace dlbac {

struct TrainConfig {
  double lr0 = 0.001;
  // lr(epoch) = lr0 / lr_decay_factor ^ floor(epoch / lr_decay_every)
  std::size_t lr_decay_every = 10;
  double lr_decay_factor = 10.0;
  std::size_t epochs = 60;
  std::size_t batch_size = 16;
  std::size_t early_stop_patience = 5;
  ClassWeights class_weights;
  double threshold = 0.5;
  double val_fraction = 0.1;
  std::uint64_t shuffle_seed = 1;

  void validate() const;
};

// Epochs are numbered from 0.
double learning_rate_at(const TrainConfig& config, std::size_t epoch);

// Tracks the best monitored loss; signals a stop after `patience`
// consecutive epochs without a strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when `loss` improves on the best so far.
  bool observe(std::size_t epoch, double loss);
  bool should_stop() const { return stale_epochs_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t stale_epochs_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> learning_rate;
  // Index of the last epoch run; every vector holds stopped_epoch + 1
  // entries.
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
};

std::string report_csv(const TrainReport& report);

struct TrainResult {
  Network network;  // parameters of the best validation epoch
  TrainReport report;
};

// Encoded tuples, one column per tuple, with matching label columns.
struct EncodedData {
  Eigen::MatrixXd features;  // encoder.width() x N
  Eigen::MatrixXd labels;    // num_ops x N
};
EncodedData encode_dataset(const Encoder& encoder, const Dataset& dataset);

// Mini-batch Adam over seeded shuffles. A val_fraction share of `train` is
// held out to monitor early stopping; with no held-out tuples the training
// loss is monitored instead.
TrainResult train(Network net, const Dataset& train, const Encoder& encoder,
                  const TrainConfig& config);

// Full pass mean loss.
double dataset_loss(const Network& net, const EncodedData& data,
                    ClassWeights weights);

}  // namespace dlbac
