#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dlbac/dataset.h"
#include "dlbac/encoding.h"
#include "dlbac/neuralnet.h"

namespace dlbac {

// Metadata of every known user and resource, keyed by id.
class MetadataStore {
 public:
  MetadataStore(std::size_t num_user_meta, std::size_t num_res_meta);

  std::size_t num_user_meta() const { return num_user_meta_; }
  std::size_t num_res_meta() const { return num_res_meta_; }
  const std::map<EntityId, std::vector<MetaValue>>& users() const { return users_; }
  const std::map<EntityId, std::vector<MetaValue>>& resources() const {
    return resources_;
  }

  // Re-adding an id with the same vector is a no-op; a different vector
  // throws Error naming both.
  void add_user(EntityId id, std::vector<MetaValue> meta);
  void add_resource(EntityId id, std::vector<MetaValue> meta);

  // Throw NotFoundError.
  const std::vector<MetaValue>& user(EntityId id) const;
  const std::vector<MetaValue>& resource(EntityId id) const;

  bool operator==(const MetadataStore&) const = default;

 private:
  std::size_t num_user_meta_;
  std::size_t num_res_meta_;
  std::map<EntityId, std::vector<MetaValue>> users_;
  std::map<EntityId, std::vector<MetaValue>> resources_;
};

MetadataStore build_store(const Dataset& dataset);

// `dlbac-store v1 <nu> <nr>` followed by `user <id> | v...` and
// `resource <id> | v...` lines.
std::string serialize_store(const MetadataStore& store);
MetadataStore parse_store(std::string_view text);
void save_store(const MetadataStore& store, const std::string& path);
// Accepts a store file or a dataset file.
MetadataStore load_store(const std::string& path);

struct Decision {
  std::size_t op_index = 0;
  double probability = 0.0;
  bool granted = false;
  double threshold = 0.5;

  bool operator==(const Decision&) const = default;
};

// Grant iff probability > threshold (strict).
inline bool grants(double probability, double threshold) {
  return probability > threshold;
}

// Looks both ids up, encodes the pair (truncating stored metadata to the
// encoder's visible counts) and thresholds the network output.
Decision decide(const Network& net, const Encoder& encoder,
                const MetadataStore& store, EntityId uid, EntityId rid,
                std::size_t op, double threshold = 0.5);

std::vector<Decision> decide_all(const Network& net, const Encoder& encoder,
                                 const MetadataStore& store, EntityId uid,
                                 EntityId rid, double threshold = 0.5);

// "GRANT 0.997312" / "DENY 0.012345"
std::string format_decision(const Decision& decision);

// The served model: read-only after construction and safe to share across
// connection handlers.
class DecisionEngine {
 public:
  DecisionEngine(Network net, Encoder encoder, MetadataStore store,
                 double threshold = 0.5);

  const Network& network() const { return net_; }
  const Encoder& encoder() const { return encoder_; }
  const MetadataStore& store() const { return store_; }
  double threshold() const { return threshold_; }

  Decision decide(EntityId uid, EntityId rid, std::size_t op) const;
  std::vector<Decision> decide_all(EntityId uid, EntityId rid) const;

  // One protocol reply (without newline) for one request line:
  //   DECIDE <uid> <rid> <op>  ->  GRANT <p> | DENY <p>
  //   PING                     ->  PONG
  //   anything else            ->  ERR <reason>
  std::string handle_request(std::string_view line) const;

 private:
  Network net_;
  Encoder encoder_;
  MetadataStore store_;
  double threshold_;
};

}  // namespace dlbac
