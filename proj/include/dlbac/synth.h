#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "dlbac/dataset.h"

namespace dlbac {

enum class ValueDistribution { kUniform, kZipf };

// Parameters of the rule-driven synthetic generator. Metadata values of
// position i are drawn from the restricted set {0, ..., size_i - 1}.
struct SynthConfig {
  std::size_t num_users = 4500;
  std::size_t num_resources = 4500;
  std::size_t num_user_meta = 8;
  std::size_t num_res_meta = 8;
  std::size_t num_ops = 4;
  std::size_t num_rules = 20;
  // One entry per metadata position, each in [6, 20]. Left empty, sizes are
  // drawn uniformly from [6, 20] with the config seed.
  std::vector<std::uint32_t> user_value_set_sizes;
  std::vector<std::uint32_t> res_value_set_sizes;
  // Leading positions kept for learning; constraints only use these.
  std::size_t visible_user_meta = 8;
  std::size_t visible_res_meta = 8;
  // Probability that a rule carries one user/resource equality constraint.
  double constraint_prob = 0.5;
  std::uint64_t seed = 1;

  // Condition counts per side, drawn uniformly from [min, max].
  std::size_t min_conditions = 1;
  std::size_t max_conditions = 3;
  // Values accepted per condition; 1 means plain equality.
  std::size_t max_condition_values = 1;
  // Rules whose expected share of random (user, resource) pairs exceeds
  // this bound are redrawn.
  double max_rule_coverage = 1.0;
  // Entities planted to satisfy each rule; disjoint across rules.
  std::size_t users_per_rule = 40;
  std::size_t resources_per_rule = 40;
  // All-deny pairs added per positive pair.
  double negative_ratio = 0.3;
  ValueDistribution value_distribution = ValueDistribution::kUniform;

  // Throws ConfigError.
  void validate() const;
};

// Accepts a metadata value when it belongs to `values` (sorted).
struct Condition {
  std::size_t meta = 0;
  std::vector<MetaValue> values;

  bool operator==(const Condition&) const = default;
};

// user.meta[user_meta] == resource.meta[res_meta]
struct Constraint {
  std::size_t user_meta = 0;
  std::size_t res_meta = 0;

  bool operator==(const Constraint&) const = default;
};

// <UAE; RAE; OP; C>: the pair is granted `ops` when the user meets every
// condition of `uae`, the resource every condition of `rae`, and every
// constraint holds.
struct Rule {
  std::vector<Condition> uae;
  std::vector<Condition> rae;
  std::vector<std::size_t> ops;  // sorted, non-empty
  std::vector<Constraint> constraints;

  bool operator==(const Rule&) const = default;
};

std::string describe_rule(const Rule& rule);

struct Entity {
  EntityId id = 0;
  std::vector<MetaValue> meta;

  bool operator==(const Entity&) const = default;
};

struct Population {
  std::vector<Entity> users;
  std::vector<Entity> resources;
};

// Restricted value set sizes actually used by a config (explicit or drawn).
struct ValueSets {
  std::vector<std::uint32_t> user;
  std::vector<std::uint32_t> resource;
};
ValueSets resolve_value_sets(const SynthConfig& config);

std::vector<Rule> generate_rules(const SynthConfig& config);

// Throws SynthesisError naming the first rule that cannot be satisfied.
Population generate_entities(const std::vector<Rule>& rules,
                             const SynthConfig& config);

bool user_satisfies(const Rule& rule, const Entity& user);
bool resource_satisfies(const Rule& rule, const Entity& resource);

// Operations granted by `rule` to the pair; empty when it does not apply.
// Uses the full metadata of both entities.
std::vector<std::size_t> evaluate_rule(const Rule& rule, const Entity& user,
                                       const Entity& resource);

// One tuple per pair granted by at least one rule, with the union of the
// granted operations, plus negative_ratio * |positive| all-deny pairs
// sampled uniformly from the remaining pairs.
Dataset generate_tuples(const std::vector<Rule>& rules,
                        const std::vector<Entity>& users,
                        const std::vector<Entity>& resources,
                        const SynthConfig& config);

struct SynthResult {
  std::vector<Rule> rules;
  Population population;
  Dataset dataset;  // full metadata; project_visible hides the rest
};
SynthResult synthesize(const SynthConfig& config);

}  // namespace dlbac
