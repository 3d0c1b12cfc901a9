#include "pool/block_store.hpp"

#include <algorithm>

#include "pool/errors.hpp"

namespace pool::store {

std::string behavior_name(Behavior b) {
  switch (b) {
    case Behavior::Honest: return "honest";
    case Behavior::Silent: return "silent";
    case Behavior::WrongShare: return "wrong_share";
    case Behavior::JunkUploader: return "junk_uploader";
  }
  throw Error("unreachable behavior");
}

Behavior behavior_from_name(const std::string& name) {
  if (name == "honest") return Behavior::Honest;
  if (name == "silent") return Behavior::Silent;
  if (name == "wrong_share") return Behavior::WrongShare;
  if (name == "junk_uploader") return Behavior::JunkUploader;
  throw ConfigError("unknown behavior \"" + name + "\"");
}

std::vector<Bytes> chunk(ByteView ciphertext, std::size_t block_size) {
  if (ciphertext.empty()) throw EmptyFile("nothing to chunk");
  if (block_size == 0) throw Error("block_size must be positive");
  std::vector<Bytes> blocks;
  blocks.reserve((ciphertext.size() + block_size - 1) / block_size);
  for (std::size_t offset = 0; offset < ciphertext.size();
       offset += block_size) {
    const std::size_t len = std::min(block_size, ciphertext.size() - offset);
    blocks.emplace_back(ciphertext.begin() + offset,
                        ciphertext.begin() + offset + len);
  }
  return blocks;
}

std::vector<std::string> place(const BlockKey& key,
                               const std::vector<std::string>& nodes,
                               std::size_t r) {
  if (r > nodes.size()) {
    throw InsufficientPeers(std::to_string(r) + " replicas from " +
                            std::to_string(nodes.size()) + " nodes");
  }
  struct Scored {
    crypto::Digest score;
    const std::string* id;
  };
  std::vector<Scored> scored;
  scored.reserve(nodes.size());
  for (const auto& id : nodes) {
    const Bytes material = to_bytes(id + "|" + key.str());
    scored.push_back({crypto::hash(material), &id});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return b.score < a.score;  // highest first
    return *a.id < *b.id;
  });
  std::vector<std::string> replicas;
  replicas.reserve(r);
  for (std::size_t i = 0; i < r; ++i) replicas.push_back(*scored[i].id);
  return replicas;
}

void DhtNetwork::add_node(const std::string& id, Behavior behavior) {
  nodes_[id].behavior = behavior;
}

void DhtNetwork::remove_node(const std::string& id) {
  nodes_.erase(id);
}

std::vector<std::string> DhtNetwork::active_nodes() const {
  std::vector<std::string> ids;
  ids.reserve(nodes_.size());
  for (const auto& [id, node] : nodes_) ids.push_back(id);
  return ids;
}

void DhtNetwork::observe_announcement(const std::string& file_id,
                                      std::uint32_t block_count) {
  announced_[file_id] = block_count;
}

void DhtNetwork::register_original(const std::string& file_id,
                                   const std::string& source,
                                   Bytes ciphertext) {
  originals_[file_id] = Original{source, std::move(ciphertext)};
}

bool DhtNetwork::put_block(const std::string& submitter, const BlockKey& key,
                           Bytes data, const crypto::Digest& digest) {
  auto announced = announced_.find(key.file_id);
  const bool covered =
      announced != announced_.end() && key.index < announced->second;
  if (!covered || crypto::hash(data) != digest) {
    ++rejected_[submitter];
    return false;
  }
  StoredBlock block{key, std::move(data), digest};
  for (const auto& replica : place(key, active_nodes(), replication_)) {
    nodes_.at(replica).blocks[key.str()] = block;
  }
  return true;
}

DhtNetwork::GetResult DhtNetwork::get_block(const std::string& requester,
                                            const BlockKey& key) {
  const std::string key_str = key.str();

  // a copy accumulated locally needs no network round trip
  if (auto self = nodes_.find(requester); self != nodes_.end()) {
    auto held = self->second.blocks.find(key_str);
    if (held != self->second.blocks.end() &&
        crypto::hash(held->second.data) == held->second.digest) {
      return GetResult{held->second.data, requester, true};
    }
  }

  for (const auto& replica : place(key, active_nodes(), replication_)) {
    if (replica == requester) continue;
    const Node& node = nodes_.at(replica);
    if (node.behavior == Behavior::Silent) {
      ++unresponsive_[replica];
      continue;
    }
    auto held = node.blocks.find(key_str);
    if (held == node.blocks.end()) continue;
    if (crypto::hash(held->second.data) != held->second.digest) {
      // false block: discard and remember who served it
      ++corrupt_[replica];
      continue;
    }
    return GetResult{held->second.data, replica, false};
  }
  return GetResult{};
}

std::optional<Bytes> DhtNetwork::source_block(const std::string& file_id,
                                              std::uint32_t index) {
  auto it = originals_.find(file_id);
  if (it == originals_.end()) return std::nullopt;
  auto node = nodes_.find(it->second.source);
  if (node == nodes_.end() || node->second.behavior == Behavior::Silent) {
    return std::nullopt;
  }
  const Bytes& ciphertext = it->second.ciphertext;
  const std::size_t offset = static_cast<std::size_t>(index) * block_size_;
  if (offset >= ciphertext.size()) return std::nullopt;
  ++source_fallbacks_;
  const std::size_t len = std::min(block_size_, ciphertext.size() - offset);
  return Bytes(ciphertext.begin() + offset, ciphertext.begin() + offset + len);
}

std::optional<Bytes> DhtNetwork::original_ciphertext(
    const std::string& file_id) const {
  auto it = originals_.find(file_id);
  if (it == originals_.end()) return std::nullopt;
  return it->second.ciphertext;
}

std::uint64_t DhtNetwork::rejected_uploads(const std::string& submitter) const {
  auto it = rejected_.find(submitter);
  return it == rejected_.end() ? 0 : it->second;
}

std::uint64_t DhtNetwork::total_rejected() const {
  std::uint64_t total = 0;
  for (const auto& [id, count] : rejected_) total += count;
  return total;
}

bool DhtNetwork::node_holds(const std::string& id, const BlockKey& key) const {
  auto it = nodes_.find(id);
  return it != nodes_.end() && it->second.blocks.count(key.str()) != 0;
}

std::size_t DhtNetwork::stored_block_count() const {
  std::size_t total = 0;
  for (const auto& [id, node] : nodes_) total += node.blocks.size();
  return total;
}

std::vector<std::string> DhtNetwork::audit_stores() const {
  std::vector<std::string> offending;
  for (const auto& [id, node] : nodes_) {
    for (const auto& [key_str, block] : node.blocks) {
      auto announced = announced_.find(block.key.file_id);
      const bool covered = announced != announced_.end() &&
                           block.key.index < announced->second;
      if (!covered || crypto::hash(block.data) != block.digest) {
        offending.push_back(id + "/" + key_str);
      }
    }
  }
  return offending;
}

void DhtNetwork::tamper_block(const std::string& id, const BlockKey& key) {
  auto& block = nodes_.at(id).blocks.at(key.str());
  block.data[0] ^= 0xff;
}

nlohmann::json DhtNetwork::dump() const {
  nlohmann::json stores = nlohmann::json::object();
  for (const auto& [id, node] : nodes_) {
    nlohmann::json blocks = nlohmann::json::object();
    for (const auto& [key_str, block] : node.blocks) {
      blocks[key_str] = nlohmann::json{{"data", to_base64(block.data)},
                                       {"digest", block.digest.hex()}};
    }
    stores[id] = nlohmann::json{{"behavior", behavior_name(node.behavior)},
                                {"blocks", blocks}};
  }
  nlohmann::json originals = nlohmann::json::object();
  for (const auto& [file_id, original] : originals_) {
    originals[file_id] = nlohmann::json{
        {"source", original.source},
        {"ciphertext", to_base64(original.ciphertext)}};
  }
  nlohmann::json announced = nlohmann::json::object();
  for (const auto& [file_id, count] : announced_) announced[file_id] = count;
  return nlohmann::json{{"stores", stores},
                        {"originals", originals},
                        {"announced", announced}};
}

}  // namespace pool::store
