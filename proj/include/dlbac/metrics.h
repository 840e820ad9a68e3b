#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlbac/dataset.h"
#include "dlbac/encoding.h"
#include "dlbac/neuralnet.h"

namespace dlbac {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

// Metrics whose denominator is zero are left empty.
struct Metrics {
  std::optional<double> precision;  // tp / (tp + fp)
  std::optional<double> tpr;        // tp / (tp + fn)
  std::optional<double> fpr;        // fp / (fp + tn)
  std::optional<double> f1;         // 2tp / (2tp + fp + fn)

  bool operator==(const Metrics&) const = default;
};

Metrics compute_metrics(const Confusion& c);

struct MetricsReport {
  std::vector<Confusion> per_op;
  Confusion micro;  // counts pooled over every operation
  std::vector<Metrics> per_op_metrics;
  Metrics micro_metrics;

  bool operator==(const MetricsReport&) const = default;
};

// Row-per-tuple bit matrices: rows[i][k] is the bit of operation k.
using BitMatrix = std::vector<std::vector<std::uint8_t>>;

// Throws ShapeError when the matrices differ in shape or are ragged.
MetricsReport score(const BitMatrix& predictions, const BitMatrix& labels);

// Grant predictions (probability > threshold) for every (tuple, op).
BitMatrix predict(const Network& net, const Encoder& encoder,
                  const Dataset& dataset, double threshold);

MetricsReport evaluate(const Network& net, const Encoder& encoder,
                       const Dataset& test, double threshold = 0.5);

// Header `op,tp,fp,tn,fn,precision,tpr,fpr,f1`; one row per operation
// (op0, op1, ...) then `micro`. Undefined metrics print as `undefined`.
std::string metrics_csv(const MetricsReport& report);

}  // namespace dlbac
