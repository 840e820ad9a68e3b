#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlbac/dataset.h"

namespace dlbac {

enum class EncodingScheme { kOneHot, kBinary };

std::string_view scheme_name(EncodingScheme scheme);
EncodingScheme parse_scheme(std::string_view name);

// Contiguous slice of the feature vector owned by one metadata position.
struct FieldSpan {
  std::size_t start = 0;
  std::size_t width = 0;

  bool operator==(const FieldSpan&) const = default;
};

// Feature vector handed to the network.
using FeatureVector = std::vector<double>;

// Categorical -> binary layout built from training tuples. User positions
// come first, then resource positions, each in declared order.
//
// One-hot: a block holds one column per training value in ascending value
// order followed by one trailing unknown column.
// Binary: seen values get dense codes 1..n in ascending order, written
// little-endian into ceil(log2(n + 1)) bits; unseen values encode as code 0,
// the all-zero pattern.
class Encoder {
 public:
  Encoder() = default;

  EncodingScheme scheme() const { return scheme_; }
  std::size_t num_user_meta() const { return num_user_meta_; }
  std::size_t num_res_meta() const { return num_res_meta_; }
  std::size_t num_fields() const { return spans_.size(); }
  std::size_t width() const { return width_; }
  const std::vector<FieldSpan>& field_spans() const { return spans_; }

  // Value -> column (one-hot) or dense code (binary) of one position.
  const std::map<MetaValue, std::size_t>& categories(std::size_t field) const {
    return categories_.at(field);
  }

  void encode_into(std::span<const MetaValue> umeta,
                   std::span<const MetaValue> rmeta,
                   std::span<double> out) const;

  bool operator==(const Encoder&) const = default;

 private:
  friend Encoder build_encoder(const Dataset&, EncodingScheme);
  friend Encoder parse_encoder(std::string_view);

  void finish_layout();

  EncodingScheme scheme_ = EncodingScheme::kOneHot;
  std::size_t num_user_meta_ = 0;
  std::size_t num_res_meta_ = 0;
  std::vector<std::map<MetaValue, std::size_t>> categories_;
  std::vector<FieldSpan> spans_;
  std::size_t width_ = 0;
};

Encoder build_encoder(const Dataset& train, EncodingScheme scheme);

// Throws ShapeError on metadata length mismatch.
FeatureVector encode_pair(const Encoder& encoder,
                          std::span<const MetaValue> umeta,
                          std::span<const MetaValue> rmeta);

// Versioned text: header lines, then one `map <field> <value> <column>` line
// per category, closed by `end`.
std::string serialize_encoder(const Encoder& encoder);
Encoder parse_encoder(std::string_view text);

void save_encoder(const Encoder& encoder, const std::string& path);
Encoder load_encoder(const std::string& path);

}  // namespace dlbac
