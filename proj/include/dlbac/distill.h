#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlbac/dataset.h"
#include "dlbac/encoding.h"
#include "dlbac/neuralnet.h"

namespace dlbac {

inline constexpr std::size_t kUnlimitedDepth = std::numeric_limits<std::size_t>::max();
inline constexpr double kSplitTieTolerance = 1e-12;

// Flat node storage; children are indices into DistilledTree::nodes.
struct TreeNode {
  bool leaf = true;
  std::size_t feature = 0;  // internal: index into [umeta..., rmeta...]
  double threshold = 0.0;   // internal: value <= threshold goes left
  std::size_t left = 0;
  std::size_t right = 0;
  double value = 0.0;       // leaf: mean target
  std::size_t count = 0;    // samples that reached the node during fitting

  bool operator==(const TreeNode&) const = default;
};

struct DistilledTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t num_user_meta = 0;
  std::size_t num_res_meta = 0;
  std::size_t op_index = 0;
  std::size_t max_depth = kUnlimitedDepth;
  std::size_t min_samples_leaf = 5;
  double training_mse = 0.0;

  std::size_t depth() const;
  std::size_t num_leaves() const;
  bool operator==(const DistilledTree&) const = default;
};

// Row per sample: visible user metadata followed by resource metadata.
using FeatureMatrix = std::vector<std::vector<double>>;

FeatureMatrix raw_features(const Dataset& dataset);

// Network grant probability for `op`, aligned with dataset tuples.
std::vector<double> soft_labels(const Network& net, const Encoder& encoder,
                                const Dataset& dataset, std::size_t op);

// Best split of a sample set: minimum summed child squared error over
// midpoints of consecutive distinct values, each child holding at least
// `min_samples_leaf` rows. A candidate replaces the incumbent only when it
// is better by more than kSplitTieTolerance, so ties keep the lowest
// feature and then the lowest threshold.
struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double cost = 0.0;
};
Split find_best_split(const FeatureMatrix& features, std::span<const double> targets,
                      std::span<const std::size_t> rows, std::size_t min_samples_leaf);

// CART regression. Throws ShapeError on empty or ragged input and
// ConfigError when min_samples_leaf is 0.
DistilledTree fit_tree(const FeatureMatrix& features, std::span<const double> targets,
                       std::size_t num_user_meta, std::size_t max_depth = 8,
                       std::size_t min_samples_leaf = 5);

// Throws ShapeError on length mismatch.
double tree_predict(const DistilledTree& tree, std::span<const MetaValue> umeta,
                    std::span<const MetaValue> rmeta);
double tree_predict(const DistilledTree& tree, std::span<const double> features);

// Bounds collected along a descent path: lower < x <= upper.
struct FeatureBound {
  std::size_t feature = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool operator==(const FeatureBound&) const = default;
};

struct ExtractedRule {
  std::vector<FeatureBound> bounds;  // ascending feature index
  double value = 0.0;                // leaf reached
  std::string text;                  // e.g. "(umeta0 > 31 AND umeta0 < 63) AND rmeta2 < 18"
};

// Conjunction of the path conditions with per-feature intervals merged.
// Integer metadata let `x <= t` read `x < floor(t) + 1` and `x > t` read
// `x > floor(t)`. A single-leaf tree yields "TRUE".
ExtractedRule extract_rule(const DistilledTree& tree, std::span<const MetaValue> umeta,
                           std::span<const MetaValue> rmeta);

bool rule_matches(const ExtractedRule& rule, std::span<const MetaValue> umeta,
                  std::span<const MetaValue> rmeta);

// Share of tuples where (tree > threshold) == (network > threshold).
double fidelity(const DistilledTree& tree, const Network& net, const Encoder& encoder,
                const Dataset& dataset, std::size_t op, double threshold = 0.5);

// Soft labels of `dataset` fitted with fit_tree.
DistilledTree distill(const Network& net, const Encoder& encoder, const Dataset& dataset,
                      std::size_t op, std::size_t max_depth = 8,
                      std::size_t min_samples_leaf = 5);

// Header `dlbac-tree v1 op <k> max_depth <d|unlimited> min_samples_leaf <m>
// mse <v> fields <nu> <nr>`, then one preorder line per node indented two
// spaces per level: `node <name> <= <threshold>` or `leaf <value> <count>`,
// closed by `end`. Reals use %.17g.
std::string serialize_tree(const DistilledTree& tree);
DistilledTree parse_tree(std::string_view text);
void save_tree(const DistilledTree& tree, const std::string& path);
DistilledTree load_tree(const std::string& path);

}  // namespace dlbac
