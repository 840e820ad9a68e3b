#include "dlbac/interpret.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "dlbac/error.h"
#include "dlbac/rng.h"

namespace dlbac {
namespace {

// Pairwise sum of rows[lo, hi) into out.
void pairwise_sum(const std::vector<std::vector<double>>& rows, std::size_t lo,
                  std::size_t hi, std::vector<double>& out) {
  if (hi - lo == 1) {
    out = rows[lo];
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> right;
  pairwise_sum(rows, lo, mid, out);
  pairwise_sum(rows, mid, hi, right);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += right[i];
}

std::vector<double> mean_of(const std::vector<std::vector<double>>& rows) {
  std::vector<double> sum;
  pairwise_sum(rows, 0, rows.size(), sum);
  for (auto& v : sum) v /= static_cast<double>(rows.size());
  return sum;
}

bool network_grants(const Network& net, const Encoder& encoder,
                    std::span<const MetaValue> umeta, std::span<const MetaValue> rmeta,
                    std::size_t op, double threshold, FeatureVector& scratch) {
  encoder.encode_into(umeta, rmeta, scratch);
  return grants(net.forward(scratch)[op], threshold);
}

void check_op(const Network& net, std::size_t op) {
  if (op >= net.num_ops()) {
    throw NotFoundError("operation " + std::to_string(op) + " out of range");
  }
}

// Copies metadata position `m` of the concatenated layout from donor to t.
void copy_meta(AuthorizationTuple& t, const AuthorizationTuple& donor, std::size_t m) {
  const std::size_t nu = t.umeta.size();
  if (m < nu) {
    t.umeta[m] = donor.umeta[m];
  } else {
    t.rmeta[m - nu] = donor.rmeta[m - nu];
  }
}

}  // namespace

std::vector<double> integrated_gradients(const Network& net,
                                         std::span<const double> x,
                                         std::span<const double> baseline,
                                         std::size_t op, std::size_t steps) {
  if (x.size() != baseline.size() || x.size() != net.input_width()) {
    throw ShapeError("input, baseline and network widths differ");
  }
  if (steps == 0) throw ConfigError("integrated gradients needs at least one step");
  check_op(net, op);
  const std::size_t n = x.size();
  std::vector<double> sum(n, 0.0), point(n);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(steps);
    for (std::size_t i = 0; i < n; ++i) {
      point[i] = baseline[i] + alpha * (x[i] - baseline[i]);
    }
    const auto grad = input_gradient(net, point, op);
    for (std::size_t i = 0; i < n; ++i) sum[i] += grad[i];
  }
  std::vector<double> ig(n);
  for (std::size_t i = 0; i < n; ++i) {
    ig[i] = (x[i] - baseline[i]) * sum[i] / static_cast<double>(steps);
  }
  return ig;
}

std::vector<double> aggregate(std::span<const double> raw, const Encoder& encoder) {
  if (raw.size() != encoder.width()) {
    throw ShapeError("attribution width does not match the encoder");
  }
  std::vector<double> scores;
  scores.reserve(encoder.num_fields());
  for (const auto& span : encoder.field_spans()) {
    double s = 0.0;
    for (std::size_t i = 0; i < span.width; ++i) s += std::abs(raw[span.start + i]);
    scores.push_back(s);
  }
  const double top = scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
  if (top > 0.0) {
    for (auto& s : scores) s /= top;
  }
  return scores;
}

Attribution explain_pair(const Network& net, const Encoder& encoder,
                         std::span<const MetaValue> umeta,
                         std::span<const MetaValue> rmeta, std::size_t op,
                         std::size_t steps) {
  const FeatureVector x = encode_pair(encoder, umeta, rmeta);
  const FeatureVector zero(x.size(), 0.0);
  Attribution a;
  a.raw = integrated_gradients(net, x, zero, op, steps);
  a.scores = aggregate(a.raw, encoder);
  a.op_index = op;
  a.steps = steps;
  return a;
}

Attribution local_explain(const Network& net, const Encoder& encoder,
                          const MetadataStore& store, EntityId uid, EntityId rid,
                          std::size_t op, std::size_t steps) {
  const auto& um = store.user(uid);
  const auto& rm = store.resource(rid);
  if (um.size() < encoder.num_user_meta() || rm.size() < encoder.num_res_meta()) {
    throw ShapeError("store holds fewer metadata values than the encoder expects");
  }
  return explain_pair(net, encoder,
                      std::span<const MetaValue>(um.data(), encoder.num_user_meta()),
                      std::span<const MetaValue>(rm.data(), encoder.num_res_meta()), op,
                      steps);
}

Attribution global_explain(const Network& net, const Encoder& encoder,
                           const Dataset& dataset, std::size_t op,
                           DecisionClass decision_class, std::size_t sample_n,
                           std::uint64_t seed, std::size_t steps) {
  check_op(net, op);
  if (sample_n == 0) throw ConfigError("sample size must be positive");
  const std::uint8_t wanted = decision_class == DecisionClass::kGrant ? 1 : 0;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].ops[op] == wanted) pool.push_back(i);
  }
  if (pool.size() < sample_n) {
    throw Error("requested " + std::to_string(sample_n) + " samples but only " +
                std::to_string(pool.size()) + " tuples of that class are available");
  }
  SplitMix64 rng(seed);
  rng.shuffle(pool);
  pool.resize(sample_n);
  std::sort(pool.begin(), pool.end());

  std::vector<std::vector<double>> raws, scores;
  for (const auto i : pool) {
    auto a = explain_pair(net, encoder, dataset[i].umeta, dataset[i].rmeta, op, steps);
    raws.push_back(std::move(a.raw));
    scores.push_back(std::move(a.scores));
  }
  Attribution out;
  out.raw = mean_of(raws);
  out.scores = mean_of(scores);
  out.op_index = op;
  out.steps = steps;
  return out;
}

std::vector<std::size_t> significance_order(const Attribution& attribution) {
  std::vector<std::size_t> order(attribution.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return attribution.scores[a] > attribution.scores[b];
  });
  return order;
}

FlipCurve flip_study(const Network& net, const Encoder& encoder,
                     const Dataset& dataset, std::size_t op,
                     const AuthorizationTuple& donor,
                     const std::vector<std::size_t>& order, double threshold) {
  check_op(net, op);
  const std::size_t nu = encoder.num_user_meta();
  const std::size_t nfields = encoder.num_fields();
  std::set<std::size_t> distinct;
  for (const auto m : order) {
    if (m >= nfields) throw NotFoundError("metadata index " + std::to_string(m) + " out of range");
    if (!distinct.insert(m).second) {
      throw ConfigError("metadata " + metadata_name(m, nu) + " listed twice");
    }
  }
  FeatureVector scratch(encoder.width());
  if (!network_grants(net, encoder, donor.umeta, donor.rmeta, op, threshold, scratch)) {
    throw Error("the network denies the donor for op" + std::to_string(op));
  }
  std::vector<AuthorizationTuple> denied;
  for (const auto& t : dataset.tuples()) {
    if (!network_grants(net, encoder, t.umeta, t.rmeta, op, threshold, scratch)) {
      denied.push_back(t);
    }
  }
  FlipCurve curve;
  const auto fraction = [&]() {
    if (denied.empty()) return 0.0;
    std::size_t granted = 0;
    for (const auto& t : denied) {
      granted += network_grants(net, encoder, t.umeta, t.rmeta, op, threshold, scratch);
    }
    return static_cast<double>(granted) / static_cast<double>(denied.size());
  };
  curve.fraction_granted.push_back(fraction());
  for (const auto m : order) {
    for (auto& t : denied) copy_meta(t, donor, m);
    curve.replaced.push_back(metadata_name(m, nu));
    curve.fraction_granted.push_back(fraction());
  }
  return curve;
}

InsignificanceResult insignificance_check(
    const Network& net, const Encoder& encoder, const AuthorizationTuple& tuple,
    const AuthorizationTuple& donor, std::size_t op, double score_threshold,
    std::size_t steps, double threshold) {
  const Attribution a = explain_pair(net, encoder, tuple.umeta, tuple.rmeta, op, steps);
  InsignificanceResult result;
  AuthorizationTuple modified = tuple;
  for (std::size_t m = 0; m < a.scores.size(); ++m) {
    if (a.scores[m] == 0.0 || a.scores[m] < score_threshold) {
      copy_meta(modified, donor, m);
      result.replaced.push_back(m);
    }
  }
  if (result.replaced.empty()) return result;
  FeatureVector scratch(encoder.width());
  const bool before =
      network_grants(net, encoder, tuple.umeta, tuple.rmeta, op, threshold, scratch);
  const bool after =
      network_grants(net, encoder, modified.umeta, modified.rmeta, op, threshold, scratch);
  result.unchanged = before == after;
  return result;
}

std::string attribution_csv(const Attribution& attribution, std::size_t num_user_meta) {
  std::string out = "metadata_name,normalized_score\n";
  char buf[64];
  for (std::size_t m = 0; m < attribution.scores.size(); ++m) {
    std::snprintf(buf, sizeof buf, ",%.9f\n", attribution.scores[m]);
    out += metadata_name(m, num_user_meta) + buf;
  }
  return out;
}

std::string flip_curve_csv(const FlipCurve& curve) {
  std::string out = "step,metadata_replaced,fraction_granted\n";
  char buf[64];
  for (std::size_t s = 0; s < curve.fraction_granted.size(); ++s) {
    std::snprintf(buf, sizeof buf, ",%.9f\n", curve.fraction_granted[s]);
    out += std::to_string(s) + "," + (s == 0 ? std::string("none") : curve.replaced[s - 1]) +
           buf;
  }
  return out;
}

}  // namespace dlbac
