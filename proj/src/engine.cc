#include "dlbac/engine.h"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "dlbac/error.h"

namespace dlbac {
namespace {

std::string join(const std::vector<MetaValue>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out + "]";
}

void insert_checked(std::map<EntityId, std::vector<MetaValue>>& map,
                    const char* kind, std::size_t expected, EntityId id,
                    std::vector<MetaValue> meta) {
  if (meta.size() != expected) {
    throw ShapeError(std::string(kind) + " " + std::to_string(id) + " has " +
                     std::to_string(meta.size()) + " metadata values, expected " +
                     std::to_string(expected));
  }
  const auto [it, inserted] = map.try_emplace(id, std::move(meta));
  if (!inserted && it->second != meta) {
    throw Error(std::string("conflicting metadata for ") + kind + " " +
                std::to_string(id) + ": " + join(it->second) + " vs " + join(meta));
  }
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

MetadataStore::MetadataStore(std::size_t num_user_meta, std::size_t num_res_meta)
    : num_user_meta_(num_user_meta), num_res_meta_(num_res_meta) {}

void MetadataStore::add_user(EntityId id, std::vector<MetaValue> meta) {
  insert_checked(users_, "user", num_user_meta_, id, std::move(meta));
}

void MetadataStore::add_resource(EntityId id, std::vector<MetaValue> meta) {
  insert_checked(resources_, "resource", num_res_meta_, id, std::move(meta));
}

const std::vector<MetaValue>& MetadataStore::user(EntityId id) const {
  const auto it = users_.find(id);
  if (it == users_.end()) throw NotFoundError("unknown user " + std::to_string(id));
  return it->second;
}

const std::vector<MetaValue>& MetadataStore::resource(EntityId id) const {
  const auto it = resources_.find(id);
  if (it == resources_.end()) {
    throw NotFoundError("unknown resource " + std::to_string(id));
  }
  return it->second;
}

MetadataStore build_store(const Dataset& dataset) {
  MetadataStore store(dataset.num_user_meta(), dataset.num_res_meta());
  for (const auto& t : dataset.tuples()) {
    store.add_user(t.uid, t.umeta);
    store.add_resource(t.rid, t.rmeta);
  }
  return store;
}

std::string serialize_store(const MetadataStore& store) {
  std::ostringstream out;
  out << "dlbac-store v1 " << store.num_user_meta() << " " << store.num_res_meta()
      << "\n";
  const auto emit = [&](const char* kind, const auto& map) {
    for (const auto& [id, meta] : map) {
      out << kind << " " << id << " |";
      for (const auto v : meta) out << " " << v;
      out << "\n";
    }
  };
  emit("user", store.users());
  emit("resource", store.resources());
  return out.str();
}

MetadataStore parse_store(std::string_view text) {
  std::size_t ln = 0;
  std::size_t pos = 0;
  std::optional<MetadataStore> store;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++ln;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto toks = split_spaces(line);
    if (toks.empty()) continue;
    if (!store) {
      std::size_t nu = 0, nr = 0;
      if (toks.size() != 4 || toks[0] != "dlbac-store" || toks[1] != "v1" ||
          !parse_number(toks[2], nu) || !parse_number(toks[3], nr)) {
        throw ParseError(ln, "expected 'dlbac-store v1 <nu> <nr>' header");
      }
      store.emplace(nu, nr);
      continue;
    }
    EntityId id = 0;
    if (toks.size() < 3 || (toks[0] != "user" && toks[0] != "resource") ||
        !parse_number(toks[1], id) || toks[2] != "|") {
      throw ParseError(ln, "expected 'user|resource <id> | values...'");
    }
    std::vector<MetaValue> meta;
    for (std::size_t i = 3; i < toks.size(); ++i) {
      MetaValue v = 0;
      if (!parse_number(toks[i], v)) {
        throw ParseError(ln, "bad metadata value '" + std::string(toks[i]) + "'");
      }
      meta.push_back(v);
    }
    try {
      if (toks[0] == "user") {
        if (store->users().count(id)) throw Error("duplicate user " + std::to_string(id));
        store->add_user(id, std::move(meta));
      } else {
        if (store->resources().count(id)) {
          throw Error("duplicate resource " + std::to_string(id));
        }
        store->add_resource(id, std::move(meta));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(ln, e.what());
    }
  }
  if (!store) throw ParseError(0, "empty store file");
  return std::move(*store);
}

void save_store(const MetadataStore& store, const std::string& path) {
  write_file(path, serialize_store(store));
}

MetadataStore load_store(const std::string& path) {
  const std::string text = read_file(path);
  try {
    if (text.starts_with("dlbac-ds")) return build_store(parse_dataset(text));
    return parse_store(text);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.what());
  }
}

namespace {

FeatureVector encode_ids(const Encoder& encoder, const MetadataStore& store,
                         EntityId uid, EntityId rid) {
  const auto& um = store.user(uid);
  const auto& rm = store.resource(rid);
  if (um.size() < encoder.num_user_meta() || rm.size() < encoder.num_res_meta()) {
    throw ShapeError("store holds fewer metadata values than the encoder expects");
  }
  return encode_pair(encoder,
                     std::span<const MetaValue>(um.data(), encoder.num_user_meta()),
                     std::span<const MetaValue>(rm.data(), encoder.num_res_meta()));
}

}  // namespace

Decision decide(const Network& net, const Encoder& encoder,
                const MetadataStore& store, EntityId uid, EntityId rid,
                std::size_t op, double threshold) {
  if (op >= net.num_ops()) {
    throw NotFoundError("operation " + std::to_string(op) + " out of range");
  }
  const auto probs = net.forward(encode_ids(encoder, store, uid, rid));
  return {op, probs[op], grants(probs[op], threshold), threshold};
}

std::vector<Decision> decide_all(const Network& net, const Encoder& encoder,
                                 const MetadataStore& store, EntityId uid,
                                 EntityId rid, double threshold) {
  const auto probs = net.forward(encode_ids(encoder, store, uid, rid));
  std::vector<Decision> out;
  out.reserve(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    out.push_back({k, probs[k], grants(probs[k], threshold), threshold});
  }
  return out;
}

std::string format_decision(const Decision& decision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s %.6f", decision.granted ? "GRANT" : "DENY",
                decision.probability);
  return buf;
}

DecisionEngine::DecisionEngine(Network net, Encoder encoder, MetadataStore store,
                               double threshold)
    : net_(std::move(net)),
      encoder_(std::move(encoder)),
      store_(std::move(store)),
      threshold_(threshold) {
  if (encoder_.width() != net_.input_width()) {
    throw ShapeError("encoder width does not match the network input");
  }
  if (store_.num_user_meta() < encoder_.num_user_meta() ||
      store_.num_res_meta() < encoder_.num_res_meta()) {
    throw ShapeError("store holds fewer metadata values than the encoder expects");
  }
}

Decision DecisionEngine::decide(EntityId uid, EntityId rid, std::size_t op) const {
  return dlbac::decide(net_, encoder_, store_, uid, rid, op, threshold_);
}

std::vector<Decision> DecisionEngine::decide_all(EntityId uid, EntityId rid) const {
  return dlbac::decide_all(net_, encoder_, store_, uid, rid, threshold_);
}

std::string DecisionEngine::handle_request(std::string_view line) const {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto toks = split_spaces(line);
  if (toks.empty()) return "ERR malformed request";
  if (toks[0] == "PING") return toks.size() == 1 ? "PONG" : "ERR malformed request";
  if (toks[0] != "DECIDE") return "ERR unknown command";
  EntityId uid = 0, rid = 0;
  std::size_t op = 0;
  if (toks.size() != 4 || !parse_number(toks[1], uid) ||
      !parse_number(toks[2], rid) || !parse_number(toks[3], op)) {
    return "ERR malformed request";
  }
  try {
    return format_decision(decide(uid, rid, op));
  } catch (const std::exception& e) {
    return std::string("ERR ") + e.what();
  }
}

}  // namespace dlbac
