// End-to-end acceptance suite: one PASS/FAIL line per criterion.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dlbac/cli.h"
#include "dlbac/dataset.h"
#include "dlbac/distill.h"
#include "dlbac/encoding.h"
#include "dlbac/engine.h"
#include "dlbac/error.h"
#include "dlbac/interpret.h"
#include "dlbac/metrics.h"
#include "dlbac/neuralnet.h"
#include "dlbac/rng.h"
#include "dlbac/server.h"
#include "dlbac/synth.h"
#include "dlbac/train.h"
#include "gradient_check.h"

namespace fs = std::filesystem;
using namespace dlbac;

namespace {

// Pinned tolerances.
constexpr double kMinF1 = 0.90;
constexpr double kMinTpr = 0.90;
constexpr double kMaxFpr = 0.10;
constexpr double kMaxRuntimeSeconds = 15 * 60;
constexpr double kMaxGradRelError = 1e-4;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kMaxCompletenessGap = 1e-3;
constexpr std::size_t kCompletenessSteps = 512;
constexpr double kFprInversionSlack = 0.005;
constexpr double kMinGrantShare = 0.80;
constexpr double kMaxInsignificantChange = 0.05;
constexpr double kMinDepth8Fidelity = 0.90;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double value_or(const std::optional<double>& v, double fallback) {
  return v ? *v : fallback;
}

struct Trained {
  Dataset train_set;
  Dataset test_set;
  Encoder encoder;
  Network net;
  MetricsReport report;
};

Trained train_default(const Dataset& data, std::uint64_t seed, TrainConfig config = {},
                      std::vector<std::size_t> hidden = {256, 128, 64, 32}) {
  auto [train_set, test_set] = split_dataset(data, 0.2, seed);
  Encoder enc = build_encoder(train_set, EncodingScheme::kOneHot);
  config.shuffle_seed = seed;
  Network net = train(init_network({enc.width(), hidden, data.num_ops(), seed}), train_set,
                      enc, config)
                    .network;
  MetricsReport report = evaluate(net, enc, test_set, config.threshold);
  return {std::move(train_set), std::move(test_set), std::move(enc), std::move(net),
          std::move(report)};
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("dlbac_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

// Criterion 1 artefacts, reused by 7 and 9.
std::optional<Dataset> g_u4k;
std::optional<Trained> g_u4k_model;

Outcome criterion1(const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  const std::string data_path = (dir / "u4k.ds").string();
  std::ostringstream out, err;
  const int status = cli::run({"synth", "--config",
                               std::string(DLBAC_SOURCE_DIR) + "/configs/u4k-r4k-auth11k.cfg",
                               "--out", data_path},
                              out, err);
  if (status != 0) return {false, "synth failed: " + err.str()};
  g_u4k = load_dataset(data_path);
  g_u4k_model = train_default(*g_u4k, 1);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const Metrics& m = g_u4k_model->report.micro_metrics;
  const double f1 = value_or(m.f1, 0), tpr = value_or(m.tpr, 0), fpr = value_or(m.fpr, 1);
  const std::size_t tuples = g_u4k_model->train_set.size() + g_u4k_model->test_set.size();
  return {f1 >= kMinF1 && tpr >= kMinTpr && fpr <= kMaxFpr && seconds <= kMaxRuntimeSeconds,
          fmt("tuples=%zu f1=%.4f tpr=%.4f fpr=%.4f runtime=%.1fs", tuples, f1, tpr, fpr,
              seconds)};
}

SynthConfig hidden_config(std::uint64_t seed) {
  SynthConfig c;
  c.num_users = 2000;
  c.num_resources = 2000;
  c.num_user_meta = 13;
  c.num_res_meta = 13;
  c.visible_user_meta = 8;
  c.visible_res_meta = 8;
  c.num_ops = 4;
  c.num_rules = 12;
  c.min_conditions = 3;
  c.max_conditions = 3;
  c.users_per_rule = 20;
  c.resources_per_rule = 20;
  c.seed = seed;
  return c;
}

Outcome criterion2() {
  std::string detail;
  bool pass = true;
  for (const std::uint64_t seed : {1, 2, 3}) {
    const Dataset full = synthesize(hidden_config(seed)).dataset;
    const Trained all_visible = train_default(full, seed);
    const Trained partial = train_default(project_visible(full, 8, 8), seed);
    const double f_all = value_or(all_visible.report.micro_metrics.f1, 0);
    const double f_partial = value_or(partial.report.micro_metrics.f1, 0);
    pass = pass && f_partial < f_all;
    detail += fmt("%sseed%zu: visible13=%.4f visible8=%.4f", detail.empty() ? "" : "; ",
                  static_cast<std::size_t>(seed), f_all, f_partial);
  }
  return {pass, detail};
}

Outcome criterion3() {
  SynthConfig c = hidden_config(7);
  c.num_ops = 1;
  c.negative_ratio = 0.2;
  const Dataset data = project_visible(synthesize(c).dataset, 8, 8);
  std::size_t grants = 0;
  for (const auto& t : data.tuples()) grants += t.ops[0];
  const double share = static_cast<double>(grants) / static_cast<double>(data.size());
  std::vector<double> fpr, precision, f1, tpr;
  std::string detail = fmt("grant share=%.3f", share);
  for (const double deny : {1.0, 2.0, 4.0, 8.0}) {
    TrainConfig tc;
    tc.class_weights = {1.0, deny};
    const Metrics m = train_default(data, 7, tc).report.micro_metrics;
    fpr.push_back(value_or(m.fpr, 0));
    precision.push_back(value_or(m.precision, 0));
    f1.push_back(value_or(m.f1, 0));
    tpr.push_back(value_or(m.tpr, 0));
    detail += fmt("; (1,%g): fpr=%.4f prec=%.4f tpr=%.4f f1=%.4f", deny, fpr.back(),
                  precision.back(), tpr.back(), f1.back());
  }
  std::size_t inversions = 0;
  bool fpr_ok = true, precision_ok = true;
  for (std::size_t i = 1; i < fpr.size(); ++i) {
    if (fpr[i] > fpr[i - 1]) {
      ++inversions;
      if (fpr[i] - fpr[i - 1] > kFprInversionSlack) fpr_ok = false;
    }
    if (precision[i] < precision[i - 1]) precision_ok = false;
  }
  return {share >= kMinGrantShare && fpr_ok && inversions <= 1 && precision_ok, detail};
}

Outcome criterion4() {
  SplitMix64 g(2024);
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  for (int n = 0; n < 100; ++n) {
    const Network net = testing::random_network(g, 4);
    std::vector<double> x(net.input_width());
    for (auto& v : x) v = g.normal();
    std::vector<std::uint8_t> y(net.num_ops());
    for (auto& v : y) v = static_cast<std::uint8_t>(g.uniform(2));
    const ClassWeights w{0.5 + g.uniform_real(), 0.5 + g.uniform_real()};
    for (const auto& r :
         {testing::check_parameter_gradients(net, x, y, w, kFiniteDifferenceStep),
          testing::check_input_gradients(net, x, g.uniform(net.num_ops()),
                                         kFiniteDifferenceStep)}) {
      worst = std::max(worst, r.max_rel_error);
      checked += r.checked;
      skipped += r.skipped;
    }
  }
  return {worst < kMaxGradRelError && checked > 0,
          fmt("networks=100 probes=%zu skipped_at_kinks=%zu max_rel_error=%.3g", checked,
              skipped, worst)};
}

Outcome criterion5() {
  SplitMix64 g(5150);
  double worst = 0.0, total512 = 0.0, total1024 = 0.0;
  bool exact_zero = true;
  std::size_t over = 0;
  for (int n = 0; n < 50; ++n) {
    const Network net = testing::random_network(g, 4);
    std::vector<double> x(net.input_width());
    for (auto& v : x) v = g.normal();
    const std::vector<double> zero(x.size(), 0.0);
    const std::size_t op = g.uniform(net.num_ops());
    const double target = net.forward(x)[op] - net.forward(zero)[op];
    const auto gap = [&](std::size_t steps) {
      const auto ig = integrated_gradients(net, x, zero, op, steps);
      return std::abs(std::accumulate(ig.begin(), ig.end(), 0.0) - target);
    };
    const double g512 = gap(kCompletenessSteps);
    worst = std::max(worst, g512);
    over += g512 >= kMaxCompletenessGap;
    total512 += g512;
    total1024 += gap(2 * kCompletenessSteps);
    for (const double a : integrated_gradients(net, x, x, op, kCompletenessSteps)) {
      exact_zero = exact_zero && a == 0.0;
    }
  }
  return {worst < kMaxCompletenessGap && total1024 < total512 && exact_zero,
          fmt("max_gap@512=%.3g nets_over_tolerance=%zu/50 mean_gap@512=%.3g mean_gap@1024=%.3g "
              "ig(x,x)=0:%s",
              worst, over, total512 / 50, total1024 / 50, exact_zero ? "yes" : "no")};
}

// op1 granted iff umeta2 < 7 and rmeta2 < 7; op0 depends on umeta0 and rmeta5.
constexpr std::size_t kPlantedUser = 2;
constexpr std::size_t kPlantedResource = 8 + 2;

Dataset planted_dataset(std::uint64_t seed) {
  SplitMix64 g(seed);
  const auto draw = [&](std::size_t count) {
    std::vector<std::vector<MetaValue>> out(count, std::vector<MetaValue>(8));
    for (auto& e : out) {
      for (auto& v : e) v = static_cast<MetaValue>(g.uniform(10));
    }
    return out;
  };
  const auto users = draw(1500);
  const auto resources = draw(1500);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  while (pairs.size() < 6000) pairs.insert({g.uniform(1500), g.uniform(1500)});
  std::vector<AuthorizationTuple> tuples;
  for (const auto& [u, r] : pairs) {
    const auto& um = users[u];
    const auto& rm = resources[r];
    const bool op0 = um[0] < 4 || rm[5] < 3;
    const bool op1 = um[2] < 7 && rm[2] < 7;
    tuples.push_back({1000 + u, 5000 + r, um, rm,
                      {static_cast<std::uint8_t>(op0), static_cast<std::uint8_t>(op1)}});
  }
  return Dataset(8, 8, 2, std::move(tuples));
}

std::optional<Dataset> g_planted;
std::optional<Trained> g_planted_model;

Outcome criterion6() {
  std::size_t hits = 0;
  std::string detail;
  for (const std::uint64_t seed : {1, 2, 3, 4, 5}) {
    Dataset data = planted_dataset(seed);
    Trained model = train_default(data, seed);
    const Attribution a =
        global_explain(model.net, model.encoder, data, 1, DecisionClass::kGrant, 50, seed);
    const auto order = significance_order(a);
    const std::set<std::size_t> top{order[0], order[1]};
    const bool hit = top == std::set<std::size_t>{kPlantedUser, kPlantedResource};
    hits += hit;
    detail += fmt("%sseed%zu:%s,%s", detail.empty() ? "" : " ", static_cast<std::size_t>(seed),
                  metadata_name(order[0], 8).c_str(), metadata_name(order[1], 8).c_str());
    if (seed == 1) {
      g_planted = std::move(data);
      g_planted_model = std::move(model);
    }
  }
  return {hits >= 4, fmt("top2 planted on %zu/5 [", hits) + detail + "]"};
}

AuthorizationTuple granted_donor(const Network& net, const Encoder& enc, const Dataset& data,
                                 std::size_t op) {
  for (const auto& t : data.tuples()) {
    if (t.ops[op] && grants(net.forward(encode_pair(enc, t.umeta, t.rmeta))[op], 0.5)) return t;
  }
  throw Error("no granted donor");
}

Outcome criterion7() {
  if (!g_u4k_model) return {false, "criterion 1 model unavailable"};
  const Trained& m = *g_u4k_model;
  const std::size_t op = 1;
  const Attribution global =
      global_explain(m.net, m.encoder, *g_u4k, op, DecisionClass::kGrant, 50, 1);
  const auto order = significance_order(global);
  const AuthorizationTuple donor = granted_donor(m.net, m.encoder, *g_u4k, op);
  const FlipCurve curve = flip_study(m.net, m.encoder, *g_u4k, op, donor, order);
  const auto& f = curve.fraction_granted;
  std::string shape;
  for (std::size_t i = 0; i < f.size(); ++i) shape += fmt("%s%.4f", i ? "," : "", f[i]);

  // Context only: how often the step-2 rise holds for other granted donors.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < g_u4k->size(); ++i) {
    const auto& t = (*g_u4k)[i];
    if (t.ops[op] && grants(m.net.forward(encode_pair(m.encoder, t.umeta, t.rmeta))[op], 0.5)) {
      candidates.push_back(i);
    }
  }
  SplitMix64 g(7);
  g.shuffle(candidates);
  std::size_t rising = 0;
  const std::size_t sampled = std::min<std::size_t>(25, candidates.size());
  for (std::size_t k = 0; k < sampled; ++k) {
    const auto& c = flip_study(m.net, m.encoder, *g_u4k, op, (*g_u4k)[candidates[k]], order)
                        .fraction_granted;
    rising += c[2] > c[1];
  }
  return {f.front() == 0.0 && f[2] > f[1] && f.back() == 1.0,
          fmt("donor=(%llu,%llu) ", static_cast<unsigned long long>(donor.uid),
              static_cast<unsigned long long>(donor.rid)) +
              "order=" + curve.replaced[0] + "," + curve.replaced[1] + ",... curve=[" + shape +
              "]" + fmt("; step2>step1 for %zu/%zu other sampled donors", rising, sampled)};
}

Outcome criterion8() {
  if (!g_planted_model) return {false, "criterion 6 model unavailable"};
  const Trained& m = *g_planted_model;
  const std::size_t op = 1;
  const AuthorizationTuple donor = granted_donor(m.net, m.encoder, *g_planted, op);
  std::vector<std::size_t> idx(g_planted->size());
  std::iota(idx.begin(), idx.end(), 0);
  SplitMix64 g(8);
  g.shuffle(idx);
  std::size_t changed = 0, replaced = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const auto r = insignificance_check(m.net, m.encoder, (*g_planted)[idx[i]], donor, op);
    changed += !r.unchanged;
    replaced += r.replaced.size();
  }
  const double share = static_cast<double>(changed) / 200.0;
  return {share < kMaxInsignificantChange,
          fmt("changed=%zu/200 (%.3f) mean_replaced=%.2f metadata", changed, share,
              static_cast<double>(replaced) / 200.0)};
}

Outcome criterion9() {
  if (!g_u4k_model) return {false, "criterion 1 model unavailable"};
  const Trained& m = *g_u4k_model;
  const std::size_t op = 1;
  const DistilledTree tree = distill(m.net, m.encoder, m.train_set, op, 8, 5);
  const double f8 = fidelity(tree, m.net, m.encoder, m.train_set, op);

  std::set<std::pair<std::vector<MetaValue>, std::vector<MetaValue>>> seen;
  std::vector<std::size_t> unique_rows;
  for (std::size_t i = 0; i < m.train_set.size(); ++i) {
    if (seen.insert({m.train_set[i].umeta, m.train_set[i].rmeta}).second) unique_rows.push_back(i);
  }
  const Dataset distinct = m.train_set.subset(unique_rows);
  const DistilledTree full = distill(m.net, m.encoder, distinct, op, kUnlimitedDepth, 1);
  const double f_full = fidelity(full, m.net, m.encoder, distinct, op);

  // Every threshold is the midpoint of the closest values on either side
  // among the training rows reaching that node.
  const FeatureMatrix x = raw_features(m.train_set);
  std::vector<double> below(tree.nodes.size(), -INFINITY), above(tree.nodes.size(), INFINITY);
  for (const auto& row : x) {
    std::size_t i = 0;
    while (!tree.nodes[i].leaf) {
      const TreeNode& n = tree.nodes[i];
      const double v = row[n.feature];
      if (v <= n.threshold) {
        below[i] = std::max(below[i], v);
        i = n.left;
      } else {
        above[i] = std::min(above[i], v);
        i = n.right;
      }
    }
  }
  bool midpoints = true;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (!tree.nodes[i].leaf) midpoints = midpoints && tree.nodes[i].threshold == (below[i] + above[i]) / 2.0;
  }
  bool rules_ok = true;
  for (const auto& t : m.train_set.tuples()) {
    const ExtractedRule rule = extract_rule(tree, t.umeta, t.rmeta);
    rules_ok = rules_ok && rule.value == tree_predict(tree, t.umeta, t.rmeta) &&
               rule_matches(rule, t.umeta, t.rmeta);
  }
  return {f8 >= kMinDepth8Fidelity && f_full == 1.0 && midpoints && rules_ok,
          fmt("depth8 fidelity=%.4f (depth %zu, %zu leaves); unlimited fidelity=%.4f on %zu "
              "distinct rows; thresholds at midpoints:%s; rules reproduce leaves:%s",
              f8, tree.depth(), tree.num_leaves(), f_full, distinct.size(),
              midpoints ? "yes" : "no", rules_ok ? "yes" : "no")};
}

// Exhaustive root split with the direct squared-error formula.
std::pair<std::size_t, double> exhaustive_root(const FeatureMatrix& x, const std::vector<double>& y,
                                              std::size_t msl, bool& found) {
  found = false;
  double best_cost = 0.0;
  std::pair<std::size_t, double> best{0, 0.0};
  for (std::size_t f = 0; f < x[0].size(); ++f) {
    std::set<double> values;
    for (const auto& row : x) values.insert(row[f]);
    std::vector<double> sorted(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
      const double t = (sorted[k] + sorted[k + 1]) / 2.0;
      double cost = 0.0;
      bool ok = true;
      for (const bool left : {true, false}) {
        std::vector<double> side;
        for (std::size_t i = 0; i < y.size(); ++i) {
          if ((x[i][f] <= t) == left) side.push_back(y[i]);
        }
        if (side.size() < msl) ok = false;
        if (side.empty()) continue;
        const double mean = std::accumulate(side.begin(), side.end(), 0.0) / side.size();
        for (const double v : side) cost += (v - mean) * (v - mean);
      }
      if (!ok) continue;
      if (!found || cost < best_cost - kSplitTieTolerance) {
        found = true;
        best_cost = cost;
        best = {f, t};
      }
    }
  }
  return best;
}

Outcome criterion10() {
  SplitMix64 g(10);
  std::size_t matched = 0, split_instances = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + g.uniform(49);
    const std::size_t d = 1 + g.uniform(4);
    FeatureMatrix x(n, std::vector<double>(d));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : x[i]) v = static_cast<double>(g.uniform(1 + g.uniform(12)));
      y[i] = g.bernoulli(0.3) ? static_cast<double>(g.uniform(3)) / 2.0 : g.uniform_real();
    }
    const std::size_t msl = 1 + g.uniform(5);
    const DistilledTree tree = fit_tree(x, y, d, 1, msl);
    bool found = false;
    const auto [feature, threshold] = exhaustive_root(x, y, msl, found);
    const TreeNode& root = tree.nodes[0];
    bool same;
    if (!found) {
      same = root.leaf;
    } else {
      ++split_instances;
      same = !root.leaf && root.feature == feature && root.threshold == threshold;
      // A zero-variance sample set is never split.
      if (root.leaf && std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
        same = true;
      }
    }
    matched += same;
  }
  return {matched == 200, fmt("exact root matches=%zu/200 (%zu with a valid split)", matched,
                              split_instances)};
}

std::string client_exchange(std::uint16_t port, const std::string& payload, std::size_t lines) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    throw Error("connect failed");
  }
  std::size_t sent = 0;
  while (sent < payload.size()) {
    const ssize_t n = ::send(fd, payload.data() + sent, payload.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) break;
    sent += static_cast<std::size_t>(n);
  }
  std::string reply;
  char buf[4096];
  while (static_cast<std::size_t>(std::count(reply.begin(), reply.end(), '\n')) < lines) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) break;
    reply.append(buf, static_cast<std::size_t>(n));
  }
  ::close(fd);
  return reply;
}

Outcome criterion11(const fs::path& dir) {
  std::vector<std::string> problems;
  const auto check = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };

  SynthConfig sc = hidden_config(11);
  sc.num_users = 600;
  sc.num_resources = 600;
  sc.num_rules = 6;
  sc.users_per_rule = 10;
  sc.resources_per_rule = 10;
  const Dataset d1 = project_visible(synthesize(sc).dataset, 8, 8);
  const Dataset d2 = project_visible(synthesize(sc).dataset, 8, 8);
  check(serialize_dataset(d1) == serialize_dataset(d2), "dataset bytes differ across runs");

  TrainConfig tc;
  tc.epochs = 4;
  const Trained m1 = train_default(d1, 3, tc, {32, 16});
  const Trained m2 = train_default(d2, 3, tc, {32, 16});
  check(serialize_model(m1.net) == serialize_model(m2.net), "model bytes differ across runs");
  check(metrics_csv(m1.report) == metrics_csv(m2.report), "metrics bytes differ across runs");

  check(parse_dataset(serialize_dataset(d1)) == d1, "dataset round trip");
  const std::string ds_path = (dir / "rt.ds").string();
  save_dataset(d1, ds_path);
  check(load_dataset(ds_path) == d1, "dataset save/load");
  for (const auto scheme : {EncodingScheme::kOneHot, EncodingScheme::kBinary}) {
    const Encoder e = build_encoder(m1.train_set, scheme);
    const Encoder back = parse_encoder(serialize_encoder(e));
    check(serialize_encoder(back) == serialize_encoder(e), "encoder round trip");
    for (const auto& t : d1.tuples()) {
      if (encode_pair(e, t.umeta, t.rmeta) != encode_pair(back, t.umeta, t.rmeta)) {
        check(false, "encoder round trip changes encodings");
        break;
      }
    }
  }
  const std::string model_path = (dir / "rt.model").string();
  save_model(m1.net, model_path);
  const Network loaded = load_model(model_path);
  check(loaded == m1.net, "model save/load");
  bool same_outputs = true;
  for (const auto& t : m1.test_set.tuples()) {
    const auto x = encode_pair(m1.encoder, t.umeta, t.rmeta);
    same_outputs = same_outputs && loaded.forward(x) == m1.net.forward(x);
  }
  check(same_outputs, "reloaded model changes probabilities");
  const MetadataStore store = build_store(d1);
  check(parse_store(serialize_store(store)) == store, "store round trip");
  const DistilledTree tree = distill(m1.net, m1.encoder, m1.train_set, 0, 6, 3);
  check(parse_tree(serialize_tree(tree)) == tree, "tree round trip");
  const std::string tree_path = (dir / "rt.tree").string();
  save_tree(tree, tree_path);
  check(load_tree(tree_path) == tree, "tree save/load");

  const DecisionEngine engine(m1.net, m1.encoder, store);
  LineServer server([&](std::string_view line) { return engine.handle_request(line); });
  const std::uint16_t port = server.bind("127.0.0.1", 0);
  server.start();
  SplitMix64 g(1111);
  std::vector<std::string> lines;
  const auto& users = store.users();
  const auto& resources = store.resources();
  const auto pick = [&](const auto& map) {
    auto it = map.begin();
    std::advance(it, static_cast<long>(g.uniform(map.size())));
    return it->first;
  };
  for (int i = 0; i < 1000; ++i) {
    switch (g.uniform(8)) {
      case 0: lines.push_back("PING"); break;
      case 1: lines.push_back("DECIDE " + std::to_string(pick(users))); break;
      case 2: lines.push_back("DECIDE 7 " + std::to_string(pick(resources)) + " 0"); break;
      case 3:
        lines.push_back("DECIDE " + std::to_string(pick(users)) + " " +
                        std::to_string(pick(resources)) + " 9");
        break;
      case 4: lines.push_back("GRANT me"); break;
      default:
        lines.push_back("DECIDE " + std::to_string(pick(users)) + " " +
                        std::to_string(pick(resources)) + " " + std::to_string(g.uniform(4)));
        break;
    }
  }
  std::string payload;
  for (const auto& l : lines) payload += l + "\n";
  const std::string replies = client_exchange(port, payload, lines.size());
  server.stop();
  const std::regex grammar("^(GRANT [01]\\.[0-9]{6}|DENY [01]\\.[0-9]{6}|PONG|ERR [^\\n]+)$");
  std::istringstream in(replies);
  std::string reply;
  std::size_t count = 0, grammatical = 0, agreeing = 0;
  while (std::getline(in, reply)) {
    if (count < lines.size()) {
      grammatical += std::regex_match(reply, grammar);
      agreeing += reply == engine.handle_request(lines[count]);
    }
    ++count;
  }
  check(count == lines.size(), fmt("got %zu replies for %zu lines", count, lines.size()));
  check(grammatical == lines.size(), fmt("%zu replies violate the grammar", lines.size() - grammatical));
  check(agreeing == lines.size(), "wire replies disagree with the engine");

  std::string detail = problems.empty() ? "all byte comparisons equal; " : "";
  for (const auto& p : problems) detail += p + "; ";
  detail += fmt("wire: %zu lines, %zu grammatical replies", lines.size(), grammatical);
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  const fs::path dir = scratch_dir();
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"end-to-end generalization", [&] { return criterion1(dir); }},
      {"hidden-metadata degradation", criterion2},
      {"weighted-loss trade-off", criterion3},
      {"gradient oracle", criterion4},
      {"integrated-gradients completeness", criterion5},
      {"planted-rule attribution", criterion6},
      {"flip-study shape", criterion7},
      {"insignificance robustness", criterion8},
      {"distillation fidelity", criterion9},
      {"brute-force split oracle", criterion10},
      {"determinism and round trips", [&] { return criterion11(dir); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  fs::remove_all(dir);
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
