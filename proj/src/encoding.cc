#include "dlbac/encoding.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <limits>
#include <set>
#include <sstream>

#include "dlbac/error.h"

namespace dlbac {
namespace {

std::size_t block_width(EncodingScheme scheme, std::size_t cardinality) {
  if (scheme == EncodingScheme::kOneHot) return cardinality + 1;
  return static_cast<std::size_t>(std::bit_width(cardinality));
}

std::vector<std::string_view> tokens_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::size_t to_size(std::string_view token, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(line, "expected an integer, got '" + std::string(token) + "'");
  }
  return v;
}

}  // namespace

std::string_view scheme_name(EncodingScheme scheme) {
  return scheme == EncodingScheme::kOneHot ? "one-hot" : "binary";
}

EncodingScheme parse_scheme(std::string_view name) {
  if (name == "one-hot" || name == "onehot") return EncodingScheme::kOneHot;
  if (name == "binary") return EncodingScheme::kBinary;
  throw ConfigError("unknown encoding scheme '" + std::string(name) + "'");
}

void Encoder::finish_layout() {
  spans_.clear();
  width_ = 0;
  for (const auto& cats : categories_) {
    const std::size_t w = block_width(scheme_, cats.size());
    spans_.push_back({width_, w});
    width_ += w;
  }
}

Encoder build_encoder(const Dataset& train, EncodingScheme scheme) {
  if (train.empty()) throw ShapeError("cannot build an encoder from no tuples");
  const std::size_t nu = train.num_user_meta();
  const std::size_t nr = train.num_res_meta();
  std::vector<std::set<MetaValue>> seen(nu + nr);
  for (const auto& t : train.tuples()) {
    for (std::size_t i = 0; i < nu; ++i) seen[i].insert(t.umeta[i]);
    for (std::size_t i = 0; i < nr; ++i) seen[nu + i].insert(t.rmeta[i]);
  }
  Encoder enc;
  enc.scheme_ = scheme;
  enc.num_user_meta_ = nu;
  enc.num_res_meta_ = nr;
  enc.categories_.resize(nu + nr);
  const std::size_t offset = scheme == EncodingScheme::kBinary ? 1 : 0;
  for (std::size_t f = 0; f < seen.size(); ++f) {
    std::size_t column = offset;
    for (const auto v : seen[f]) enc.categories_[f][v] = column++;
  }
  enc.finish_layout();
  return enc;
}

void Encoder::encode_into(std::span<const MetaValue> umeta,
                          std::span<const MetaValue> rmeta,
                          std::span<double> out) const {
  if (umeta.size() != num_user_meta_ || rmeta.size() != num_res_meta_) {
    throw ShapeError("metadata lengths " + std::to_string(umeta.size()) + "/" +
                     std::to_string(rmeta.size()) + " do not match encoder " +
                     std::to_string(num_user_meta_) + "/" +
                     std::to_string(num_res_meta_));
  }
  if (out.size() != width_) throw ShapeError("feature buffer has wrong width");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t f = 0; f < spans_.size(); ++f) {
    const MetaValue v = f < num_user_meta_ ? umeta[f] : rmeta[f - num_user_meta_];
    const auto& cats = categories_[f];
    const auto it = cats.find(v);
    const FieldSpan span = spans_[f];
    if (scheme_ == EncodingScheme::kOneHot) {
      const std::size_t col = it == cats.end() ? cats.size() : it->second;
      out[span.start + col] = 1.0;
    } else {
      const std::size_t code = it == cats.end() ? 0 : it->second;
      for (std::size_t b = 0; b < span.width; ++b) {
        out[span.start + b] = static_cast<double>((code >> b) & 1U);
      }
    }
  }
}

FeatureVector encode_pair(const Encoder& encoder,
                          std::span<const MetaValue> umeta,
                          std::span<const MetaValue> rmeta) {
  FeatureVector x(encoder.width());
  encoder.encode_into(umeta, rmeta, x);
  return x;
}

std::string serialize_encoder(const Encoder& encoder) {
  std::ostringstream out;
  out << "dlbac-encoder v1\n";
  out << "scheme " << scheme_name(encoder.scheme()) << "\n";
  out << "fields " << encoder.num_user_meta() << " " << encoder.num_res_meta()
      << "\n";
  for (std::size_t f = 0; f < encoder.num_fields(); ++f) {
    const auto& cats = encoder.categories(f);
    out << "field " << f << " " << cats.size() << "\n";
    for (const auto& [value, column] : cats) {
      out << "map " << f << " " << value << " " << column << "\n";
    }
  }
  out << "end\n";
  return out.str();
}

Encoder parse_encoder(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  std::size_t ln = 0;
  const auto next = [&]() {
    while (ln < lines.size()) {
      auto toks = tokens_of(lines[ln++]);
      if (!toks.empty()) return toks;
    }
    throw ParseError(ln, "truncated encoder file");
  };

  auto toks = next();
  if (toks.size() != 2 || toks[0] != "dlbac-encoder") {
    throw ParseError(ln, "missing 'dlbac-encoder' header");
  }
  if (toks[1] != "v1") {
    throw ParseError(ln, "unsupported encoder version '" + std::string(toks[1]) + "'");
  }
  Encoder enc;
  toks = next();
  if (toks.size() != 2 || toks[0] != "scheme") throw ParseError(ln, "expected scheme line");
  try {
    enc.scheme_ = parse_scheme(toks[1]);
  } catch (const ConfigError& e) {
    throw ParseError(ln, e.what());
  }
  toks = next();
  if (toks.size() != 3 || toks[0] != "fields") throw ParseError(ln, "expected fields line");
  enc.num_user_meta_ = to_size(toks[1], ln);
  enc.num_res_meta_ = to_size(toks[2], ln);
  const std::size_t num_fields = enc.num_user_meta_ + enc.num_res_meta_;
  enc.categories_.resize(num_fields);
  const std::size_t offset = enc.scheme_ == EncodingScheme::kBinary ? 1 : 0;

  for (std::size_t f = 0; f < num_fields; ++f) {
    toks = next();
    if (toks.size() != 3 || toks[0] != "field" || to_size(toks[1], ln) != f) {
      throw ParseError(ln, "expected 'field " + std::to_string(f) + " <count>'");
    }
    const std::size_t count = to_size(toks[2], ln);
    std::vector<bool> used(count, false);
    for (std::size_t k = 0; k < count; ++k) {
      toks = next();
      if (toks.size() != 4 || toks[0] != "map" || to_size(toks[1], ln) != f) {
        throw ParseError(ln, "expected 'map " + std::to_string(f) +
                                 " <value> <column>'");
      }
      const std::size_t value = to_size(toks[2], ln);
      const std::size_t column = to_size(toks[3], ln);
      if (column < offset || column - offset >= count || used[column - offset]) {
        throw ParseError(ln, "invalid or repeated column " + std::to_string(column));
      }
      used[column - offset] = true;
      if (value > std::numeric_limits<MetaValue>::max() ||
          !enc.categories_[f].emplace(static_cast<MetaValue>(value), column).second) {
        throw ParseError(ln, "invalid or repeated value " + std::to_string(value));
      }
    }
  }
  toks = next();
  if (toks.size() != 1 || toks[0] != "end") throw ParseError(ln, "expected 'end'");
  enc.finish_layout();
  return enc;
}

void save_encoder(const Encoder& encoder, const std::string& path) {
  write_file(path, serialize_encoder(encoder));
}

Encoder load_encoder(const std::string& path) {
  try {
    return parse_encoder(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.what());
  }
}

}  // namespace dlbac
