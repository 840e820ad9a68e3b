#include "dlbac/distill.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include "dlbac/engine.h"
#include "dlbac/error.h"

namespace dlbac {
namespace {

std::vector<double> concat(std::span<const MetaValue> umeta,
                           std::span<const MetaValue> rmeta) {
  std::vector<double> x;
  x.reserve(umeta.size() + rmeta.size());
  for (const auto v : umeta) x.push_back(v);
  for (const auto v : rmeta) x.push_back(v);
  return x;
}

void check_lengths(const DistilledTree& tree, std::size_t nu, std::size_t nr) {
  if (nu != tree.num_user_meta || nr != tree.num_res_meta) {
    throw ShapeError("metadata lengths " + std::to_string(nu) + "/" + std::to_string(nr) +
                     " do not match tree layout " + std::to_string(tree.num_user_meta) +
                     "/" + std::to_string(tree.num_res_meta));
  }
}

std::size_t descend(const DistilledTree& tree, std::span<const double> x) {
  std::size_t i = 0;
  while (!tree.nodes[i].leaf) {
    const auto& n = tree.nodes[i];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return i;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_bound(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.0f", v);
  return buf;
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> y, std::size_t max_depth,
              std::size_t min_samples_leaf, DistilledTree& tree)
      : x_(x), y_(y), max_depth_(max_depth), msl_(min_samples_leaf), tree_(tree) {}

  std::size_t build(const std::vector<std::size_t>& rows, std::size_t depth) {
    const std::size_t id = tree_.nodes.size();
    tree_.nodes.emplace_back();
    tree_.nodes[id].count = rows.size();
    bool constant = true;
    for (const auto r : rows) constant = constant && y_[r] == y_[rows.front()];
    Split split;
    if (!constant && depth < max_depth_ && rows.size() >= 2 * msl_) {
      split = find_best_split(x_, y_, rows, msl_);
    }
    if (!split.found) {
      double value = y_[rows.front()];
      if (!constant) {
        double sum = 0.0;
        for (const auto r : rows) sum += y_[r];
        value = sum / static_cast<double>(rows.size());
      }
      for (const auto r : rows) sse_ += (y_[r] - value) * (y_[r] - value);
      tree_.nodes[id].value = value;
      return id;
    }
    std::vector<std::size_t> left, right;
    for (const auto r : rows) {
      (x_[r][split.feature] <= split.threshold ? left : right).push_back(r);
    }
    const std::size_t l = build(left, depth + 1);
    const std::size_t rgt = build(right, depth + 1);
    auto& node = tree_.nodes[id];
    node.leaf = false;
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = rgt;
    return id;
  }

  double sse() const { return sse_; }

 private:
  const FeatureMatrix& x_;
  std::span<const double> y_;
  std::size_t max_depth_;
  std::size_t msl_;
  DistilledTree& tree_;
  double sse_ = 0.0;
};

}  // namespace

std::size_t DistilledTree::depth() const {
  if (nodes.empty()) return 0;
  const std::function<std::size_t(std::size_t)> rec = [&](std::size_t i) -> std::size_t {
    if (nodes[i].leaf) return 0;
    return 1 + std::max(rec(nodes[i].left), rec(nodes[i].right));
  };
  return rec(0);
}

std::size_t DistilledTree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.leaf; }));
}

FeatureMatrix raw_features(const Dataset& dataset) {
  FeatureMatrix out;
  out.reserve(dataset.size());
  for (const auto& t : dataset.tuples()) out.push_back(concat(t.umeta, t.rmeta));
  return out;
}

std::vector<double> soft_labels(const Network& net, const Encoder& encoder,
                                const Dataset& dataset, std::size_t op) {
  if (op >= net.num_ops()) {
    throw NotFoundError("operation " + std::to_string(op) + " out of range");
  }
  std::vector<double> out;
  out.reserve(dataset.size());
  FeatureVector x(encoder.width());
  for (const auto& t : dataset.tuples()) {
    encoder.encode_into(t.umeta, t.rmeta, x);
    out.push_back(net.forward(x)[op]);
  }
  return out;
}

Split find_best_split(const FeatureMatrix& features, std::span<const double> targets,
                      std::span<const std::size_t> rows, std::size_t min_samples_leaf) {
  Split best;
  const std::size_t n = rows.size();
  if (n < 2 || n < 2 * min_samples_leaf) return best;
  double mean = 0.0;
  for (const auto r : rows) mean += targets[r];
  mean /= static_cast<double>(n);

  const std::size_t num_features = features[rows.front()].size();
  std::vector<std::size_t> order(rows.begin(), rows.end());
  std::vector<double> prefix(n + 1), prefix_sq(n + 1);
  for (std::size_t f = 0; f < num_features; ++f) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return features[a][f] < features[b][f];
    });
    for (std::size_t i = 0; i < n; ++i) {
      const double c = targets[order[i]] - mean;
      prefix[i + 1] = prefix[i] + c;
      prefix_sq[i + 1] = prefix_sq[i] + c * c;
    }
    for (std::size_t i = min_samples_leaf; i + min_samples_leaf <= n; ++i) {
      const double lo = features[order[i - 1]][f];
      const double hi = features[order[i]][f];
      if (!(lo < hi)) continue;
      const double nl = static_cast<double>(i);
      const double nr = static_cast<double>(n - i);
      const double sl = prefix[i], sr = prefix[n] - prefix[i];
      const double cost = (prefix_sq[i] - sl * sl / nl) +
                          (prefix_sq[n] - prefix_sq[i] - sr * sr / nr);
      if (!best.found || cost < best.cost - kSplitTieTolerance) {
        best = {true, f, lo + (hi - lo) / 2.0, cost};
      }
    }
  }
  return best;
}

DistilledTree fit_tree(const FeatureMatrix& features, std::span<const double> targets,
                       std::size_t num_user_meta, std::size_t max_depth,
                       std::size_t min_samples_leaf) {
  if (features.empty()) throw ShapeError("cannot fit a tree to no samples");
  if (features.size() != targets.size()) {
    throw ShapeError("feature and target counts differ");
  }
  if (min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be at least 1");
  const std::size_t width = features.front().size();
  if (num_user_meta > width) throw ShapeError("more user metadata than features");
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != width) {
      throw ShapeError("feature row " + std::to_string(i) + " has the wrong length");
    }
    for (const auto v : features[i]) {
      if (!std::isfinite(v)) throw ShapeError("non-finite feature value");
    }
    if (!std::isfinite(targets[i])) throw ShapeError("non-finite target");
  }
  DistilledTree tree;
  tree.num_user_meta = num_user_meta;
  tree.num_res_meta = width - num_user_meta;
  tree.max_depth = max_depth;
  tree.min_samples_leaf = min_samples_leaf;
  std::vector<std::size_t> rows(features.size());
  std::iota(rows.begin(), rows.end(), 0);
  TreeBuilder builder(features, targets, max_depth, min_samples_leaf, tree);
  builder.build(rows, 0);
  tree.training_mse = builder.sse() / static_cast<double>(features.size());
  return tree;
}

double tree_predict(const DistilledTree& tree, std::span<const double> features) {
  if (features.size() != tree.num_user_meta + tree.num_res_meta) {
    throw ShapeError("feature vector length does not match the tree");
  }
  return tree.nodes[descend(tree, features)].value;
}

double tree_predict(const DistilledTree& tree, std::span<const MetaValue> umeta,
                    std::span<const MetaValue> rmeta) {
  check_lengths(tree, umeta.size(), rmeta.size());
  return tree_predict(tree, concat(umeta, rmeta));
}

ExtractedRule extract_rule(const DistilledTree& tree, std::span<const MetaValue> umeta,
                           std::span<const MetaValue> rmeta) {
  check_lengths(tree, umeta.size(), rmeta.size());
  const auto x = concat(umeta, rmeta);
  std::vector<FeatureBound> bounds(x.size());
  std::vector<bool> touched(x.size(), false);
  std::size_t i = 0;
  while (!tree.nodes[i].leaf) {
    const auto& n = tree.nodes[i];
    auto& b = bounds[n.feature];
    b.feature = n.feature;
    touched[n.feature] = true;
    if (x[n.feature] <= n.threshold) {
      b.upper = std::min(b.upper, n.threshold);
      i = n.left;
    } else {
      b.lower = std::max(b.lower, n.threshold);
      i = n.right;
    }
  }
  ExtractedRule rule;
  rule.value = tree.nodes[i].value;
  std::vector<std::string> parts;
  for (std::size_t f = 0; f < x.size(); ++f) {
    if (!touched[f]) continue;
    const auto& b = bounds[f];
    rule.bounds.push_back(b);
    const std::string name = metadata_name(f, tree.num_user_meta);
    const bool has_lower = std::isfinite(b.lower);
    const bool has_upper = std::isfinite(b.upper);
    const std::string lower = name + " > " + format_bound(std::floor(b.lower));
    const std::string upper = name + " < " + format_bound(std::floor(b.upper) + 1.0);
    if (has_lower && has_upper) {
      parts.push_back("(" + lower + " AND " + upper + ")");
    } else {
      parts.push_back(has_lower ? lower : upper);
    }
  }
  if (parts.empty()) {
    rule.text = "TRUE";
  } else {
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (k) rule.text += " AND ";
      rule.text += parts[k];
    }
  }
  return rule;
}

bool rule_matches(const ExtractedRule& rule, std::span<const MetaValue> umeta,
                  std::span<const MetaValue> rmeta) {
  const auto x = concat(umeta, rmeta);
  for (const auto& b : rule.bounds) {
    if (b.feature >= x.size()) throw ShapeError("rule refers to a missing feature");
    if (!(x[b.feature] > b.lower && x[b.feature] <= b.upper)) return false;
  }
  return true;
}

double fidelity(const DistilledTree& tree, const Network& net, const Encoder& encoder,
                const Dataset& dataset, std::size_t op, double threshold) {
  if (dataset.empty()) return 1.0;
  const auto probs = soft_labels(net, encoder, dataset, op);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& t = dataset[i];
    agree += grants(tree_predict(tree, t.umeta, t.rmeta), threshold) ==
             grants(probs[i], threshold);
  }
  return static_cast<double>(agree) / static_cast<double>(dataset.size());
}

DistilledTree distill(const Network& net, const Encoder& encoder, const Dataset& dataset,
                      std::size_t op, std::size_t max_depth, std::size_t min_samples_leaf) {
  const auto targets = soft_labels(net, encoder, dataset, op);
  DistilledTree tree = fit_tree(raw_features(dataset), targets, dataset.num_user_meta(),
                                max_depth, min_samples_leaf);
  tree.op_index = op;
  return tree;
}

std::string serialize_tree(const DistilledTree& tree) {
  std::string out = "dlbac-tree v1 op " + std::to_string(tree.op_index) + " max_depth " +
                    (tree.max_depth == kUnlimitedDepth ? std::string("unlimited")
                                                       : std::to_string(tree.max_depth)) +
                    " min_samples_leaf " + std::to_string(tree.min_samples_leaf) + " mse " +
                    format_real(tree.training_mse) + " fields " +
                    std::to_string(tree.num_user_meta) + " " +
                    std::to_string(tree.num_res_meta) + "\n";
  const std::function<void(std::size_t, std::size_t)> emit = [&](std::size_t i,
                                                               std::size_t depth) {
    const auto& n = tree.nodes[i];
    out.append(2 * depth, ' ');
    if (n.leaf) {
      out += "leaf " + format_real(n.value) + " " + std::to_string(n.count) + "\n";
      return;
    }
    out += "node " + metadata_name(n.feature, tree.num_user_meta) + " <= " +
           format_real(n.threshold) + "\n";
    emit(n.left, depth + 1);
    emit(n.right, depth + 1);
  };
  if (!tree.nodes.empty()) emit(0, 0);
  out += "end\n";
  return out;
}

namespace {

std::vector<std::string_view> words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t s = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > s) out.push_back(line.substr(s, i - s));
  }
  return out;
}

template <typename T>
T number(std::string_view tok, std::size_t ln) {
  T v{};
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    throw ParseError(ln, "bad number '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

DistilledTree parse_tree(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view l = text.substr(pos, end - pos);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    lines.push_back(l);
    pos = end + 1;
  }
  if (lines.empty()) throw ParseError(0, "empty tree file");
  const auto head = words(lines[0]);
  if (head.size() != 13 || head[0] != "dlbac-tree" || head[1] != "v1" || head[2] != "op" ||
      head[4] != "max_depth" || head[6] != "min_samples_leaf" || head[8] != "mse" ||
      head[10] != "fields") {
    throw ParseError(1, "expected 'dlbac-tree v1 op ... fields <nu> <nr>' header");
  }
  DistilledTree tree;
  tree.op_index = number<std::size_t>(head[3], 1);
  tree.max_depth =
      head[5] == "unlimited" ? kUnlimitedDepth : number<std::size_t>(head[5], 1);
  tree.min_samples_leaf = number<std::size_t>(head[7], 1);
  tree.training_mse = number<double>(head[9], 1);
  tree.num_user_meta = number<std::size_t>(head[11], 1);
  tree.num_res_meta = number<std::size_t>(head[12], 1);
  std::size_t ln = 1;
  const std::function<std::size_t(std::size_t)> read = [&](std::size_t depth) -> std::size_t {
    if (ln >= lines.size()) throw ParseError(ln, "truncated tree file");
    const std::string_view line = lines[ln++];
    const std::size_t indent = line.find_first_not_of(' ');
    if (indent != 2 * depth) {
      throw ParseError(ln, "expected indentation " + std::to_string(2 * depth));
    }
    const auto toks = words(line);
    const std::size_t id = tree.nodes.size();
    tree.nodes.emplace_back();
    if (toks.size() == 3 && toks[0] == "leaf") {
      const double value = number<double>(toks[1], ln);
      if (!(value >= 0.0 && value <= 1.0)) throw ParseError(ln, "leaf value outside [0, 1]");
      tree.nodes[id].value = value;
      tree.nodes[id].count = number<std::size_t>(toks[2], ln);
      return id;
    }
    if (toks.size() != 4 || toks[0] != "node" || toks[2] != "<=") {
      throw ParseError(ln, "expected 'node <feature> <= <threshold>' or 'leaf <value> <count>'");
    }
    std::size_t feature = 0;
    try {
      feature = metadata_index(toks[1], tree.num_user_meta, tree.num_res_meta);
    } catch (const NotFoundError& e) {
      throw ParseError(ln, e.what());
    }
    const double threshold = number<double>(toks[3], ln);
    if (!std::isfinite(threshold)) throw ParseError(ln, "non-finite threshold");
    const std::size_t l = read(depth + 1);
    const std::size_t r = read(depth + 1);
    auto& n = tree.nodes[id];
    n.leaf = false;
    n.feature = feature;
    n.threshold = threshold;
    n.left = l;
    n.right = r;
    n.count = tree.nodes[l].count + tree.nodes[r].count;
    return id;
  };
  read(0);
  while (ln < lines.size() && words(lines[ln]).empty()) ++ln;
  if (ln >= lines.size() || lines[ln] != "end") throw ParseError(ln + 1, "expected 'end'");
  return tree;
}

void save_tree(const DistilledTree& tree, const std::string& path) {
  write_file(path, serialize_tree(tree));
}

DistilledTree load_tree(const std::string& path) {
  try {
    return parse_tree(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.what());
  }
}

}  // namespace dlbac
