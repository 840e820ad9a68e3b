#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dlbac {

using EntityId = std::uint64_t;
using MetaValue = std::uint32_t;

// One (user, resource) pair: metadata of both sides and one grant bit per
// operation (1 = grant, 0 = deny).
struct AuthorizationTuple {
  EntityId uid = 0;
  EntityId rid = 0;
  std::vector<MetaValue> umeta;
  std::vector<MetaValue> rmeta;
  std::vector<std::uint8_t> ops;

  bool operator==(const AuthorizationTuple&) const = default;
};

// An immutable set of authorization tuples sharing one header. Tuples are
// always held in canonical order, sorted by (uid, rid); the constructor
// validates dimensions and (uid, rid) uniqueness.
class Dataset {
 public:
  Dataset(std::size_t num_user_meta, std::size_t num_res_meta,
          std::size_t num_ops, std::vector<AuthorizationTuple> tuples);

  std::size_t num_user_meta() const { return num_user_meta_; }
  std::size_t num_res_meta() const { return num_res_meta_; }
  std::size_t num_ops() const { return num_ops_; }
  std::size_t size() const { return tuples_.size(); }
  bool empty() const { return tuples_.empty(); }

  const std::vector<AuthorizationTuple>& tuples() const { return tuples_; }
  const AuthorizationTuple& operator[](std::size_t i) const {
    return tuples_[i];
  }

  // Dataset with the same header holding the tuples at `indices`.
  Dataset subset(const std::vector<std::size_t>& indices) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::size_t num_user_meta_;
  std::size_t num_res_meta_;
  std::size_t num_ops_;
  std::vector<AuthorizationTuple> tuples_;
};

// Text format:
//   dlbac-ds v1 <num_user_meta> <num_res_meta> <num_ops>
//   <uid> <rid> | u1 ... uK | r1 ... rL | o1 ... oM
// Blank lines are ignored. Errors carry the offending line number.
Dataset parse_dataset(std::string_view text);
std::string serialize_dataset(const Dataset& dataset);

Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& dataset, const std::string& path);

// Keeps the first `visible_user_meta` / `visible_res_meta` positions of each
// side. Labels are left untouched: they were computed from the full
// metadata, which is how hidden metadata enter a dataset.
Dataset project_visible(const Dataset& dataset, std::size_t visible_user_meta,
                        std::size_t visible_res_meta);

// Disjoint partition with |test| = round(test_fraction * N) after a
// seeded shuffle.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset,
                                          double test_fraction,
                                          std::uint64_t seed);

// Name of a metadata position in the concatenated [user..., resource...]
// layout: umeta0, umeta1, ..., rmeta0, ...
std::string metadata_name(std::size_t index, std::size_t num_user_meta);

// Inverse of metadata_name; throws NotFoundError.
std::size_t metadata_index(std::string_view name, std::size_t num_user_meta,
                           std::size_t num_res_meta);

// Reads a whole file; throws Error when it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace dlbac
