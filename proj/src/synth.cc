#include "dlbac/synth.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dlbac/error.h"
#include "dlbac/rng.h"

namespace dlbac {
namespace {

constexpr std::uint32_t kMinValueSetSize = 6;
constexpr std::uint32_t kMaxValueSetSize = 20;
constexpr int kMaxRuleAttempts = 100;
constexpr int kMaxRepairPasses = 50;
constexpr EntityId kUserIdBase = 1000;
constexpr EntityId kResourceIdBase = 2000;

// Stream salts; each generation stage draws from its own fork of the seed.
constexpr std::uint64_t kSaltValueSets = 1;
constexpr std::uint64_t kSaltRules = 2;
constexpr std::uint64_t kSaltEntities = 3;
constexpr std::uint64_t kSaltNegatives = 4;

SplitMix64 stage_rng(const SynthConfig& config, std::uint64_t salt) {
  SplitMix64 root(config.seed);
  return root.fork(salt);
}

bool contains(const std::vector<MetaValue>& sorted, MetaValue v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

// Values a rule permits at one metadata position of one side.
std::vector<MetaValue> allowed_values(const std::vector<Condition>& conditions,
                                      std::size_t meta, std::uint32_t size) {
  for (const auto& c : conditions) {
    if (c.meta == meta) return c.values;
  }
  std::vector<MetaValue> all(size);
  for (std::uint32_t v = 0; v < size; ++v) all[v] = v;
  return all;
}

std::vector<MetaValue> intersect(const std::vector<MetaValue>& a,
                                 const std::vector<MetaValue>& b) {
  std::vector<MetaValue> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

// Empty string when the rule is well formed and satisfiable.
std::string rule_problem(const Rule& rule, const ValueSets& sets,
                         const SynthConfig& config) {
  if (rule.ops.empty()) return "no operations";
  for (const auto op : rule.ops) {
    if (op >= config.num_ops) return "operation index out of range";
  }
  const auto check_side = [](const std::vector<Condition>& conds,
                             const std::vector<std::uint32_t>& sizes)
      -> std::string {
    std::set<std::size_t> metas;
    for (const auto& c : conds) {
      if (c.meta >= sizes.size()) return "condition index out of range";
      if (!metas.insert(c.meta).second) return "repeated condition metadata";
      if (c.values.empty()) return "condition without values";
      if (!std::is_sorted(c.values.begin(), c.values.end())) {
        return "condition values not sorted";
      }
      for (const auto v : c.values) {
        if (v >= sizes[c.meta]) return "condition value outside value set";
      }
    }
    return {};
  };
  if (auto p = check_side(rule.uae, sets.user); !p.empty()) return "UAE " + p;
  if (auto p = check_side(rule.rae, sets.resource); !p.empty()) {
    return "RAE " + p;
  }
  std::set<std::size_t> user_metas, res_metas;
  for (const auto& c : rule.constraints) {
    if (c.user_meta >= config.visible_user_meta ||
        c.res_meta >= config.visible_res_meta) {
      return "constraint references hidden metadata";
    }
    if (!user_metas.insert(c.user_meta).second ||
        !res_metas.insert(c.res_meta).second) {
      return "constraints must use distinct metadata";
    }
    const auto shared =
        intersect(allowed_values(rule.uae, c.user_meta, sets.user[c.user_meta]),
                  allowed_values(rule.rae, c.res_meta, sets.resource[c.res_meta]));
    if (shared.empty()) return "constraint cannot hold under the conditions";
  }
  return {};
}

// Expected share of uniformly random pairs the rule grants.
double rule_coverage(const Rule& rule, const ValueSets& sets) {
  double share = 1.0;
  for (const auto& c : rule.uae) {
    share *= static_cast<double>(c.values.size()) / sets.user[c.meta];
  }
  for (const auto& c : rule.rae) {
    share *= static_cast<double>(c.values.size()) / sets.resource[c.meta];
  }
  for (const auto& c : rule.constraints) {
    const auto ua = allowed_values(rule.uae, c.user_meta, sets.user[c.user_meta]);
    const auto ra =
        allowed_values(rule.rae, c.res_meta, sets.resource[c.res_meta]);
    share *= static_cast<double>(intersect(ua, ra).size()) /
             (static_cast<double>(ua.size()) * static_cast<double>(ra.size()));
  }
  return share;
}

std::vector<Condition> draw_conditions(SplitMix64& rng, std::size_t num_meta,
                                       const std::vector<std::uint32_t>& sizes,
                                       const SynthConfig& config) {
  const auto upper = std::min(config.max_conditions, num_meta);
  const auto lower = std::min(config.min_conditions, upper);
  const auto count = static_cast<std::size_t>(rng.uniform_in(
      static_cast<std::int64_t>(lower), static_cast<std::int64_t>(upper)));
  std::vector<std::size_t> metas(num_meta);
  for (std::size_t i = 0; i < num_meta; ++i) metas[i] = i;
  rng.shuffle(metas);
  metas.resize(count);
  std::sort(metas.begin(), metas.end());

  std::vector<Condition> out;
  for (const auto meta : metas) {
    const std::uint32_t size = sizes[meta];
    const auto num_values = static_cast<std::size_t>(rng.uniform_in(
        1, static_cast<std::int64_t>(
               std::min<std::size_t>(config.max_condition_values, size))));
    std::vector<MetaValue> pool(size);
    for (std::uint32_t v = 0; v < size; ++v) pool[v] = v;
    rng.shuffle(pool);
    pool.resize(num_values);
    std::sort(pool.begin(), pool.end());
    out.push_back({meta, std::move(pool)});
  }
  return out;
}

MetaValue draw_value(SplitMix64& rng, std::uint32_t size,
                     ValueDistribution distribution,
                     std::map<std::uint32_t, ZipfSampler>& zipf) {
  if (distribution == ValueDistribution::kUniform) {
    return static_cast<MetaValue>(rng.uniform(size));
  }
  auto it = zipf.find(size);
  if (it == zipf.end()) it = zipf.emplace(size, ZipfSampler(size, 1.0)).first;
  return it->second.sample(rng);
}

std::vector<MetaValue> constraint_key(const Rule& rule, const Entity& e,
                                      bool user_side) {
  std::vector<MetaValue> key;
  key.reserve(rule.constraints.size());
  for (const auto& c : rule.constraints) {
    key.push_back(e.meta[user_side ? c.user_meta : c.res_meta]);
  }
  return key;
}

struct KeyHash {
  std::size_t operator()(const std::vector<MetaValue>& key) const {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (const auto v : key) h = (h ^ v) * 0x100000001b3ULL;
    return h;
  }
};

}  // namespace

void SynthConfig::validate() const {
  const auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (num_users == 0 || num_resources == 0) fail("entity counts must be positive");
  if (num_user_meta == 0 || num_res_meta == 0) {
    fail("metadata counts must be positive");
  }
  if (num_ops == 0) fail("num_ops must be at least 1");
  if (num_rules == 0) fail("num_rules must be positive");
  if (visible_user_meta > num_user_meta || visible_res_meta > num_res_meta) {
    fail("visible metadata count exceeds total metadata count");
  }
  const auto check_sizes = [&](const std::vector<std::uint32_t>& sizes,
                               std::size_t expected, const char* side) {
    if (sizes.empty()) return;
    if (sizes.size() != expected) {
      fail(std::string(side) + " value set sizes must list one entry per metadata");
    }
    for (const auto s : sizes) {
      if (s < kMinValueSetSize || s > kMaxValueSetSize) {
        fail(std::string(side) + " value set sizes must lie in [6, 20]");
      }
    }
  };
  check_sizes(user_value_set_sizes, num_user_meta, "user");
  check_sizes(res_value_set_sizes, num_res_meta, "resource");
  if (!(constraint_prob >= 0.0 && constraint_prob <= 1.0)) {
    fail("constraint_prob must lie in [0, 1]");
  }
  if (min_conditions == 0 || min_conditions > max_conditions) {
    fail("condition counts must satisfy 1 <= min <= max");
  }
  if (max_condition_values == 0) fail("max_condition_values must be positive");
  if (!(max_rule_coverage > 0.0)) fail("max_rule_coverage must be positive");
  if (users_per_rule == 0 || resources_per_rule == 0) {
    fail("planted entities per rule must be positive");
  }
  if (num_rules * users_per_rule > num_users) {
    fail("num_rules * users_per_rule exceeds num_users");
  }
  if (num_rules * resources_per_rule > num_resources) {
    fail("num_rules * resources_per_rule exceeds num_resources");
  }
  if (!(negative_ratio >= 0.0)) fail("negative_ratio must be non-negative");
}

std::string describe_rule(const Rule& rule) {
  std::ostringstream out;
  const auto side = [&](const std::vector<Condition>& conds, const char* prefix) {
    if (conds.empty()) out << "TRUE";
    for (std::size_t i = 0; i < conds.size(); ++i) {
      if (i) out << ", ";
      out << prefix << conds[i].meta << "=";
      if (conds[i].values.size() == 1) {
        out << conds[i].values[0];
      } else {
        out << "{";
        for (std::size_t k = 0; k < conds[i].values.size(); ++k) {
          out << (k ? "," : "") << conds[i].values[k];
        }
        out << "}";
      }
    }
  };
  out << "<";
  side(rule.uae, "umeta");
  out << "; ";
  side(rule.rae, "rmeta");
  out << "; {";
  for (std::size_t i = 0; i < rule.ops.size(); ++i) {
    out << (i ? "," : "") << "op" << rule.ops[i];
  }
  out << "}; ";
  if (rule.constraints.empty()) out << "TRUE";
  for (std::size_t i = 0; i < rule.constraints.size(); ++i) {
    if (i) out << ", ";
    out << "umeta" << rule.constraints[i].user_meta << "=rmeta"
        << rule.constraints[i].res_meta;
  }
  out << ">";
  return out.str();
}

ValueSets resolve_value_sets(const SynthConfig& config) {
  SplitMix64 rng = stage_rng(config, kSaltValueSets);
  const auto draw = [&](const std::vector<std::uint32_t>& given,
                        std::size_t count) {
    std::vector<std::uint32_t> sizes(count);
    for (auto& s : sizes) {
      s = static_cast<std::uint32_t>(
          rng.uniform_in(kMinValueSetSize, kMaxValueSetSize));
    }
    return given.empty() ? sizes : given;
  };
  ValueSets sets;
  sets.user = draw(config.user_value_set_sizes, config.num_user_meta);
  sets.resource = draw(config.res_value_set_sizes, config.num_res_meta);
  return sets;
}

std::vector<Rule> generate_rules(const SynthConfig& config) {
  config.validate();
  const ValueSets sets = resolve_value_sets(config);
  SplitMix64 rng = stage_rng(config, kSaltRules);

  std::vector<Rule> rules;
  rules.reserve(config.num_rules);
  for (std::size_t r = 0; r < config.num_rules; ++r) {
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxRuleAttempts && !accepted; ++attempt) {
      Rule rule;
      rule.uae = draw_conditions(rng, config.num_user_meta, sets.user, config);
      rule.rae = draw_conditions(rng, config.num_res_meta, sets.resource, config);

      std::vector<std::size_t> ops(config.num_ops);
      for (std::size_t i = 0; i < ops.size(); ++i) ops[i] = i;
      rng.shuffle(ops);
      ops.resize(static_cast<std::size_t>(
          rng.uniform_in(1, static_cast<std::int64_t>(config.num_ops))));
      std::sort(ops.begin(), ops.end());
      rule.ops = std::move(ops);

      if (rng.bernoulli(config.constraint_prob)) {
        rule.constraints.push_back(
            {static_cast<std::size_t>(rng.uniform(config.visible_user_meta)),
             static_cast<std::size_t>(rng.uniform(config.visible_res_meta))});
      }
      if (rule_problem(rule, sets, config).empty() &&
          rule_coverage(rule, sets) <= config.max_rule_coverage) {
        rules.push_back(std::move(rule));
        accepted = true;
      }
    }
    if (!accepted) {
      throw SynthesisError("rule " + std::to_string(r) +
                           ": no satisfiable rule within the coverage bound after " +
                           std::to_string(kMaxRuleAttempts) + " attempts");
    }
  }
  return rules;
}

bool user_satisfies(const Rule& rule, const Entity& user) {
  for (const auto& c : rule.uae) {
    if (!contains(c.values, user.meta[c.meta])) return false;
  }
  return true;
}

bool resource_satisfies(const Rule& rule, const Entity& resource) {
  for (const auto& c : rule.rae) {
    if (!contains(c.values, resource.meta[c.meta])) return false;
  }
  return true;
}

std::vector<std::size_t> evaluate_rule(const Rule& rule, const Entity& user,
                                       const Entity& resource) {
  if (!user_satisfies(rule, user) || !resource_satisfies(rule, resource)) {
    return {};
  }
  for (const auto& c : rule.constraints) {
    if (user.meta[c.user_meta] != resource.meta[c.res_meta]) return {};
  }
  return rule.ops;
}

Population generate_entities(const std::vector<Rule>& rules,
                             const SynthConfig& config) {
  config.validate();
  if (rules.empty()) throw SynthesisError("no rules to generate entities for");
  if (rules.size() * config.users_per_rule > config.num_users ||
      rules.size() * config.resources_per_rule > config.num_resources) {
    throw ConfigError("too few entities to plant every rule");
  }
  const ValueSets sets = resolve_value_sets(config);
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const auto problem = rule_problem(rules[r], sets, config);
    if (!problem.empty()) {
      throw SynthesisError("rule " + std::to_string(r) + " " +
                           describe_rule(rules[r]) + " is unsatisfiable: " +
                           problem);
    }
  }

  SplitMix64 rng = stage_rng(config, kSaltEntities);
  std::map<std::uint32_t, ZipfSampler> zipf;
  const auto random_entities = [&](std::size_t count, EntityId base,
                                   const std::vector<std::uint32_t>& sizes) {
    std::vector<Entity> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      out[i].id = base + i;
      out[i].meta.resize(sizes.size());
      for (std::size_t m = 0; m < sizes.size(); ++m) {
        out[i].meta[m] =
            draw_value(rng, sizes[m], config.value_distribution, zipf);
      }
    }
    return out;
  };
  Population pop;
  pop.users = random_entities(config.num_users, kUserIdBase, sets.user);
  pop.resources =
      random_entities(config.num_resources, kResourceIdBase, sets.resource);

  std::vector<std::size_t> user_order(pop.users.size());
  for (std::size_t i = 0; i < user_order.size(); ++i) user_order[i] = i;
  rng.shuffle(user_order);
  std::vector<std::size_t> res_order(pop.resources.size());
  for (std::size_t i = 0; i < res_order.size(); ++i) res_order[i] = i;
  rng.shuffle(res_order);

  for (std::size_t r = 0; r < rules.size(); ++r) {
    const Rule& rule = rules[r];
    const std::size_t u0 = r * config.users_per_rule;
    for (std::size_t k = 0; k < config.users_per_rule; ++k) {
      Entity& user = pop.users[user_order[u0 + k]];
      for (const auto& c : rule.uae) {
        user.meta[c.meta] = c.values[rng.uniform(c.values.size())];
      }
      for (const auto& c : rule.constraints) {
        const auto shared = intersect(
            allowed_values(rule.uae, c.user_meta, sets.user[c.user_meta]),
            allowed_values(rule.rae, c.res_meta, sets.resource[c.res_meta]));
        user.meta[c.user_meta] = shared[rng.uniform(shared.size())];
      }
    }
    const std::size_t r0 = r * config.resources_per_rule;
    for (std::size_t k = 0; k < config.resources_per_rule; ++k) {
      Entity& res = pop.resources[res_order[r0 + k]];
      for (const auto& c : rule.rae) {
        res.meta[c.meta] = c.values[rng.uniform(c.values.size())];
      }
      const Entity& partner =
          pop.users[user_order[u0 + rng.uniform(config.users_per_rule)]];
      for (const auto& c : rule.constraints) {
        res.meta[c.res_meta] = partner.meta[c.user_meta];
      }
    }
  }

  // Any resource meeting a rule's RAE, planted or not, must have a user that
  // completes the rule. Random resources can miss the constraint value of
  // every qualifying user; move their constraint value onto one that exists.
  for (int pass = 0;; ++pass) {
    if (pass == kMaxRepairPasses) {
      throw SynthesisError("resource repair did not converge");
    }
    bool changed = false;
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const Rule& rule = rules[r];
      if (rule.constraints.empty()) continue;
      std::unordered_set<std::vector<MetaValue>, KeyHash> keys;
      std::vector<const Entity*> donors;
      for (const auto& user : pop.users) {
        if (!user_satisfies(rule, user)) continue;
        keys.insert(constraint_key(rule, user, true));
        bool keeps_rae = true;
        for (const auto& c : rule.constraints) {
          keeps_rae =
              keeps_rae &&
              contains(allowed_values(rule.rae, c.res_meta,
                                      sets.resource[c.res_meta]),
                       user.meta[c.user_meta]);
        }
        if (keeps_rae) donors.push_back(&user);
      }
      for (auto& res : pop.resources) {
        if (!resource_satisfies(rule, res)) continue;
        if (keys.contains(constraint_key(rule, res, false))) continue;
        if (donors.empty()) {
          throw SynthesisError("rule " + std::to_string(r) + " " +
                               describe_rule(rule) +
                               " has no user completing its constraint");
        }
        const Entity& donor = *donors[rng.uniform(donors.size())];
        for (const auto& c : rule.constraints) {
          res.meta[c.res_meta] = donor.meta[c.user_meta];
        }
        changed = true;
      }
    }
    if (!changed) break;
  }
  return pop;
}

Dataset generate_tuples(const std::vector<Rule>& rules,
                        const std::vector<Entity>& users,
                        const std::vector<Entity>& resources,
                        const SynthConfig& config) {
  const std::size_t num_ops = config.num_ops;
  // Keyed by user index * |resources| + resource index.
  std::unordered_map<std::uint64_t, std::vector<std::uint8_t>> granted;
  const std::uint64_t stride = resources.size();

  for (const Rule& rule : rules) {
    std::vector<std::size_t> rs;
    for (std::size_t i = 0; i < resources.size(); ++i) {
      if (resource_satisfies(rule, resources[i])) rs.push_back(i);
    }
    if (rs.empty()) continue;
    std::unordered_map<std::vector<MetaValue>, std::vector<std::size_t>, KeyHash>
        users_by_key;
    for (std::size_t i = 0; i < users.size(); ++i) {
      if (user_satisfies(rule, users[i])) {
        users_by_key[constraint_key(rule, users[i], true)].push_back(i);
      }
    }
    for (const auto ri : rs) {
      const auto it = users_by_key.find(constraint_key(rule, resources[ri], false));
      if (it == users_by_key.end()) continue;
      for (const auto ui : it->second) {
        auto& bits = granted[ui * stride + ri];
        if (bits.empty()) bits.assign(num_ops, 0);
        for (const auto op : rule.ops) bits[op] = 1;
      }
    }
  }

  const std::uint64_t total_pairs =
      static_cast<std::uint64_t>(users.size()) * resources.size();
  const auto num_negative = static_cast<std::uint64_t>(
      std::llround(config.negative_ratio * static_cast<double>(granted.size())));
  if (num_negative > total_pairs - granted.size()) {
    throw ConfigError("not enough ungranted pairs for " +
                      std::to_string(num_negative) + " negative tuples");
  }
  SplitMix64 rng = stage_rng(config, kSaltNegatives);
  std::vector<std::uint64_t> negatives;
  if (num_negative * 2 > total_pairs - granted.size()) {
    for (std::uint64_t key = 0; key < total_pairs; ++key) {
      if (!granted.contains(key)) negatives.push_back(key);
    }
    rng.shuffle(negatives);
    negatives.resize(num_negative);
  } else {
    std::unordered_set<std::uint64_t> picked;
    while (negatives.size() < num_negative) {
      const std::uint64_t key = rng.uniform(total_pairs);
      if (granted.contains(key) || !picked.insert(key).second) continue;
      negatives.push_back(key);
    }
  }

  std::vector<AuthorizationTuple> tuples;
  tuples.reserve(granted.size() + negatives.size());
  const auto make = [&](std::uint64_t key, std::vector<std::uint8_t> bits) {
    const Entity& u = users[key / stride];
    const Entity& r = resources[key % stride];
    tuples.push_back({u.id, r.id, u.meta, r.meta, std::move(bits)});
  };
  for (auto& [key, bits] : granted) make(key, std::move(bits));
  for (const auto key : negatives) {
    make(key, std::vector<std::uint8_t>(num_ops, 0));
  }
  return Dataset(users.empty() ? config.num_user_meta : users[0].meta.size(),
                 resources.empty() ? config.num_res_meta
                                   : resources[0].meta.size(),
                 num_ops, std::move(tuples));
}

SynthResult synthesize(const SynthConfig& config) {
  auto rules = generate_rules(config);
  auto population = generate_entities(rules, config);
  auto dataset =
      generate_tuples(rules, population.users, population.resources, config);
  return {std::move(rules), std::move(population), std::move(dataset)};
}

}  // namespace dlbac
