#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlbac/dataset.h"
#include "dlbac/encoding.h"
#include "dlbac/engine.h"
#include "dlbac/neuralnet.h"

namespace dlbac {

inline constexpr std::size_t kDefaultIgSteps = 128;

// IG_i = (x_i - b_i) / steps * sum_{k=1..steps} dF_op/dx_i at b + (k/steps)(x - b)
// (right Riemann sum). Throws ShapeError on width mismatch, ConfigError
// when steps is 0.
std::vector<double> integrated_gradients(const Network& net,
                                         std::span<const double> x,
                                         std::span<const double> baseline,
                                         std::size_t op, std::size_t steps);

// Sum of |raw| over each metadata block, divided by the largest block sum.
// All-zero input gives all zeros.
std::vector<double> aggregate(std::span<const double> raw, const Encoder& encoder);

struct Attribution {
  std::vector<double> raw;     // per feature
  std::vector<double> scores;  // per metadata, in [0, 1]
  std::size_t op_index = 0;
  std::size_t steps = 0;
  std::string baseline = "zero";

  bool operator==(const Attribution&) const = default;
};

// Attribution of one pair against the all-zero baseline.
Attribution explain_pair(const Network& net, const Encoder& encoder,
                         std::span<const MetaValue> umeta,
                         std::span<const MetaValue> rmeta, std::size_t op,
                         std::size_t steps = kDefaultIgSteps);

Attribution local_explain(const Network& net, const Encoder& encoder,
                          const MetadataStore& store, EntityId uid, EntityId rid,
                          std::size_t op, std::size_t steps = kDefaultIgSteps);

enum class DecisionClass { kGrant, kDeny };

// Mean of per-tuple normalized scores over `sample_n` tuples drawn without
// replacement from those whose label for `op` is `decision_class`. Throws
// Error naming the available count when there are too few.
Attribution global_explain(const Network& net, const Encoder& encoder,
                           const Dataset& dataset, std::size_t op,
                           DecisionClass decision_class, std::size_t sample_n = 50,
                           std::uint64_t seed = 1,
                           std::size_t steps = kDefaultIgSteps);

// Metadata indices by descending score; ties keep the lower index first.
std::vector<std::size_t> significance_order(const Attribution& attribution);

struct FlipCurve {
  std::vector<std::string> replaced;     // metadata names, in order
  std::vector<double> fraction_granted;  // replaced.size() + 1 entries
};

// Takes every tuple the network denies for `op`, then overwrites the
// metadata listed in `order` with the donor's values one at a time and
// records the share the network grants after each step. Throws Error when
// the network denies the donor.
FlipCurve flip_study(const Network& net, const Encoder& encoder,
                     const Dataset& dataset, std::size_t op,
                     const AuthorizationTuple& donor,
                     const std::vector<std::size_t>& order, double threshold = 0.5);

struct InsignificanceResult {
  bool unchanged = true;
  std::vector<std::size_t> replaced;  // metadata indices overwritten
};

// Overwrites every metadata of `tuple` whose local score is below
// `score_threshold` (or exactly zero) with the donor's value and reports
// whether the decision for `op` survives.
InsignificanceResult insignificance_check(
    const Network& net, const Encoder& encoder, const AuthorizationTuple& tuple,
    const AuthorizationTuple& donor, std::size_t op, double score_threshold = 0.05,
    std::size_t steps = kDefaultIgSteps, double threshold = 0.5);

// `metadata_name,normalized_score`
std::string attribution_csv(const Attribution& attribution,
                            std::size_t num_user_meta);
// `step,metadata_replaced,fraction_granted`; step 0 reads `none`.
std::string flip_curve_csv(const FlipCurve& curve);

}  // namespace dlbac
