#include "dlbac/metrics.h"

#include <cstdio>

#include "dlbac/engine.h"
#include "dlbac/error.h"

namespace dlbac {
namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

Metrics compute_metrics(const Confusion& c) {
  return {ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn),
          ratio(c.fp, c.fp + c.tn), ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)};
}

MetricsReport score(const BitMatrix& predictions, const BitMatrix& labels) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("prediction and label row counts differ");
  }
  const std::size_t ops = labels.empty() ? 0 : labels.front().size();
  MetricsReport report;
  report.per_op.resize(ops);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() != ops || predictions[i].size() != ops) {
      throw ShapeError("row " + std::to_string(i) + " has the wrong number of operations");
    }
    for (std::size_t k = 0; k < ops; ++k) {
      auto& c = report.per_op[k];
      const bool p = predictions[i][k] != 0;
      const bool y = labels[i][k] != 0;
      if (p && y) ++c.tp;
      else if (p) ++c.fp;
      else if (y) ++c.fn;
      else ++c.tn;
    }
  }
  for (const auto& c : report.per_op) {
    report.micro += c;
    report.per_op_metrics.push_back(compute_metrics(c));
  }
  report.micro_metrics = compute_metrics(report.micro);
  return report;
}

BitMatrix predict(const Network& net, const Encoder& encoder,
                  const Dataset& dataset, double threshold) {
  BitMatrix out;
  out.reserve(dataset.size());
  FeatureVector x(encoder.width());
  for (const auto& t : dataset.tuples()) {
    encoder.encode_into(t.umeta, t.rmeta, x);
    const auto probs = net.forward(x);
    std::vector<std::uint8_t> row(probs.size());
    for (std::size_t k = 0; k < probs.size(); ++k) row[k] = grants(probs[k], threshold);
    out.push_back(std::move(row));
  }
  return out;
}

MetricsReport evaluate(const Network& net, const Encoder& encoder,
                       const Dataset& test, double threshold) {
  if (test.num_ops() != net.num_ops()) {
    throw ShapeError("dataset and network disagree on the number of operations");
  }
  BitMatrix labels;
  labels.reserve(test.size());
  for (const auto& t : test.tuples()) labels.push_back(t.ops);
  return score(predict(net, encoder, test, threshold), labels);
}

std::string metrics_csv(const MetricsReport& report) {
  std::string out = "op,tp,fp,tn,fn,precision,tpr,fpr,f1\n";
  const auto row = [&](const std::string& name, const Confusion& c, const Metrics& m) {
    out += name + "," + std::to_string(c.tp) + "," + std::to_string(c.fp) + "," +
           std::to_string(c.tn) + "," + std::to_string(c.fn) + "," + cell(m.precision) +
           "," + cell(m.tpr) + "," + cell(m.fpr) + "," + cell(m.f1) + "\n";
  };
  for (std::size_t k = 0; k < report.per_op.size(); ++k) {
    row("op" + std::to_string(k), report.per_op[k], report.per_op_metrics[k]);
  }
  row("micro", report.micro, report.micro_metrics);
  return out;
}

}  // namespace dlbac
