#include "dlbac/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "dlbac/error.h"
#include "dlbac/rng.h"

namespace dlbac {
namespace {

constexpr std::string_view kMagic = "dlbac-ds";
constexpr std::string_view kVersion = "v1";

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                               line[i] == '\r')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' &&
           line[i] != '\r') {
      ++i;
    }
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_integer(std::string_view token, std::size_t line) {
  T value{};
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(line, "expected a non-negative integer, got '" +
                               std::string(token) + "'");
  }
  return value;
}

bool tuple_key_less(const AuthorizationTuple& a, const AuthorizationTuple& b) {
  return std::tie(a.uid, a.rid) < std::tie(b.uid, b.rid);
}

}  // namespace

Dataset::Dataset(std::size_t num_user_meta, std::size_t num_res_meta,
                 std::size_t num_ops, std::vector<AuthorizationTuple> tuples)
    : num_user_meta_(num_user_meta),
      num_res_meta_(num_res_meta),
      num_ops_(num_ops),
      tuples_(std::move(tuples)) {
  for (const auto& t : tuples_) {
    if (t.umeta.size() != num_user_meta_ || t.rmeta.size() != num_res_meta_ ||
        t.ops.size() != num_ops_) {
      throw ShapeError("tuple (" + std::to_string(t.uid) + ", " +
                       std::to_string(t.rid) +
                       ") does not match the dataset header");
    }
    for (const auto op : t.ops) {
      if (op > 1) throw ShapeError("operation bits must be 0 or 1");
    }
  }
  std::stable_sort(tuples_.begin(), tuples_.end(), tuple_key_less);
  for (std::size_t i = 1; i < tuples_.size(); ++i) {
    if (!tuple_key_less(tuples_[i - 1], tuples_[i])) {
      throw ShapeError("duplicate tuple (" + std::to_string(tuples_[i].uid) +
                       ", " + std::to_string(tuples_[i].rid) + ")");
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<AuthorizationTuple> picked;
  picked.reserve(indices.size());
  for (const std::size_t i : indices) picked.push_back(tuples_.at(i));
  return Dataset(num_user_meta_, num_res_meta_, num_ops_, std::move(picked));
}

Dataset parse_dataset(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  std::size_t nu = 0, nr = 0, nops = 0;
  std::vector<AuthorizationTuple> tuples;
  // Line of first appearance per key, for duplicate diagnostics.
  std::vector<std::pair<AuthorizationTuple, std::size_t>> seen;

  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!have_header) {
      if (tokens.size() != 5 || tokens[0] != kMagic) {
        throw ParseError(line_no, "missing 'dlbac-ds' header");
      }
      if (tokens[1] != kVersion) {
        throw ParseError(line_no, "unsupported dataset version '" +
                                      std::string(tokens[1]) + "'");
      }
      nu = parse_integer<std::size_t>(tokens[2], line_no);
      nr = parse_integer<std::size_t>(tokens[3], line_no);
      nops = parse_integer<std::size_t>(tokens[4], line_no);
      have_header = true;
      continue;
    }
    const std::size_t expected = 2 + 1 + nu + 1 + nr + 1 + nops;
    if (tokens.size() != expected || tokens[2] != "|" ||
        tokens[3 + nu] != "|" || tokens[4 + nu + nr] != "|") {
      throw ParseError(line_no, "tuple does not match header dimensions " +
                                    std::to_string(nu) + "/" +
                                    std::to_string(nr) + "/" +
                                    std::to_string(nops));
    }
    AuthorizationTuple t;
    t.uid = parse_integer<EntityId>(tokens[0], line_no);
    t.rid = parse_integer<EntityId>(tokens[1], line_no);
    t.umeta.reserve(nu);
    for (std::size_t i = 0; i < nu; ++i) {
      t.umeta.push_back(parse_integer<MetaValue>(tokens[3 + i], line_no));
    }
    t.rmeta.reserve(nr);
    for (std::size_t i = 0; i < nr; ++i) {
      t.rmeta.push_back(parse_integer<MetaValue>(tokens[4 + nu + i], line_no));
    }
    t.ops.reserve(nops);
    for (std::size_t i = 0; i < nops; ++i) {
      const auto bit = parse_integer<unsigned>(tokens[5 + nu + nr + i], line_no);
      if (bit > 1) throw ParseError(line_no, "operation bits must be 0 or 1");
      t.ops.push_back(static_cast<std::uint8_t>(bit));
    }
    tuples.push_back(std::move(t));
    seen.emplace_back(AuthorizationTuple{tuples.back().uid, tuples.back().rid,
                                         {}, {}, {}},
                      line_no);
  }
  if (!have_header) throw ParseError(0, "empty dataset: missing header");

  std::stable_sort(seen.begin(), seen.end(), [](const auto& a, const auto& b) {
    return tuple_key_less(a.first, b.first);
  });
  for (std::size_t i = 1; i < seen.size(); ++i) {
    if (!tuple_key_less(seen[i - 1].first, seen[i].first)) {
      throw ParseError(seen[i].second,
                       "duplicate tuple (" + std::to_string(seen[i].first.uid) +
                           ", " + std::to_string(seen[i].first.rid) +
                           "), first seen on line " +
                           std::to_string(seen[i - 1].second));
    }
  }
  return Dataset(nu, nr, nops, std::move(tuples));
}

std::string serialize_dataset(const Dataset& dataset) {
  std::string out;
  out.reserve(64 + dataset.size() *
                       (24 + 4 * (dataset.num_user_meta() +
                                  dataset.num_res_meta() + dataset.num_ops())));
  out += "dlbac-ds v1 ";
  out += std::to_string(dataset.num_user_meta());
  out += ' ';
  out += std::to_string(dataset.num_res_meta());
  out += ' ';
  out += std::to_string(dataset.num_ops());
  out += '\n';
  for (const auto& t : dataset.tuples()) {
    out += std::to_string(t.uid);
    out += ' ';
    out += std::to_string(t.rid);
    out += " |";
    for (const auto v : t.umeta) {
      out += ' ';
      out += std::to_string(v);
    }
    out += " |";
    for (const auto v : t.rmeta) {
      out += ' ';
      out += std::to_string(v);
    }
    out += " |";
    for (const auto o : t.ops) {
      out += ' ';
      out += o ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  try {
    return parse_dataset(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.what());
  }
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  write_file(path, serialize_dataset(dataset));
}

Dataset project_visible(const Dataset& dataset, std::size_t visible_user_meta,
                        std::size_t visible_res_meta) {
  if (visible_user_meta > dataset.num_user_meta() ||
      visible_res_meta > dataset.num_res_meta()) {
    throw ConfigError("visible metadata counts " +
                      std::to_string(visible_user_meta) + "/" +
                      std::to_string(visible_res_meta) +
                      " exceed the dataset header " +
                      std::to_string(dataset.num_user_meta()) + "/" +
                      std::to_string(dataset.num_res_meta()));
  }
  std::vector<AuthorizationTuple> tuples;
  tuples.reserve(dataset.size());
  for (const auto& t : dataset.tuples()) {
    AuthorizationTuple p;
    p.uid = t.uid;
    p.rid = t.rid;
    p.umeta.assign(t.umeta.begin(), t.umeta.begin() + visible_user_meta);
    p.rmeta.assign(t.rmeta.begin(), t.rmeta.begin() + visible_res_meta);
    p.ops = t.ops;
    tuples.push_back(std::move(p));
  }
  return Dataset(visible_user_meta, visible_res_meta, dataset.num_ops(),
                 std::move(tuples));
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset,
                                          double test_fraction,
                                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 rng(seed);
  rng.shuffle(order);
  const auto num_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(dataset.size())));
  std::vector<std::size_t> test(order.begin(), order.begin() + num_test);
  std::vector<std::size_t> train(order.begin() + num_test, order.end());
  return {dataset.subset(train), dataset.subset(test)};
}

std::string metadata_name(std::size_t index, std::size_t num_user_meta) {
  if (index < num_user_meta) return "umeta" + std::to_string(index);
  return "rmeta" + std::to_string(index - num_user_meta);
}

std::size_t metadata_index(std::string_view name, std::size_t num_user_meta,
                           std::size_t num_res_meta) {
  const auto fail = [&] {
    return NotFoundError("unknown metadata '" + std::string(name) + "'");
  };
  if (name.size() < 6) throw fail();
  const std::string_view prefix = name.substr(0, 5);
  const std::string_view digits = name.substr(5);
  std::size_t index = 0;
  const auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) throw fail();
  if (prefix == "umeta" && index < num_user_meta) return index;
  if (prefix == "rmeta" && index < num_res_meta) return num_user_meta + index;
  throw fail();
}

}  // namespace dlbac
