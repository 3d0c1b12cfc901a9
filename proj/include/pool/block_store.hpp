#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pool/bytes.hpp"
#include "pool/crypto.hpp"

namespace pool::store {

// Node behaviors modelled by the simulator. Silent nodes receive and store
// everything but never serve blocks or answer share requests; wrong-share
// nodes answer with corrupted share values; junk uploaders push unannounced
// blocks every round.
enum class Behavior { Honest, Silent, WrongShare, JunkUploader };

std::string behavior_name(Behavior b);
Behavior behavior_from_name(const std::string& name);  // throws ConfigError

struct BlockKey {
  std::string file_id;
  std::uint32_t index = 0;

  std::string str() const { return file_id + ":" + std::to_string(index); }

  auto operator<=>(const BlockKey&) const = default;
};

struct StoredBlock {
  BlockKey key;
  Bytes data;
  crypto::Digest digest;

  bool operator==(const StoredBlock&) const = default;
};

// Splits ciphertext into equal-size payloads; the last may be shorter.
// Throws EmptyFile.
std::vector<Bytes> chunk(ByteView ciphertext, std::size_t block_size);

// Rendezvous placement: the r nodes with the highest hash(node || key) hold
// the block. Deterministic; changing the node set by one node only moves keys
// that gain or lose that node.
std::vector<std::string> place(const BlockKey& key,
                               const std::vector<std::string>& nodes,
                               std::size_t r);  // throws InsufficientPeers

// The simulated distributed hash table. One store per active node; uploads
// are gated on announcements observed via the message layer, so junk never
// lands anywhere.
class DhtNetwork {
 public:
  DhtNetwork(std::size_t replication, std::size_t block_size)
      : replication_(replication), block_size_(block_size) {}

  std::size_t block_size() const { return block_size_; }
  std::size_t replication() const { return replication_; }

  void add_node(const std::string& id, Behavior behavior);
  void remove_node(const std::string& id);
  std::vector<std::string> active_nodes() const;  // sorted ids

  void observe_announcement(const std::string& file_id,
                            std::uint32_t block_count);
  // The source keeps its original ciphertext outside the DHT placement.
  void register_original(const std::string& file_id, const std::string& source,
                         Bytes ciphertext);

  // Places data on its replicas. False when the upload is dropped
  // (unannounced file, out-of-range index, or digest mismatch).
  bool put_block(const std::string& submitter, const BlockKey& key,
                 Bytes data, const crypto::Digest& digest);

  struct GetResult {
    std::optional<Bytes> data;
    std::string provider;  // empty when unavailable
    bool served_locally = false;
  };
  // Requester-local copy first, then replicas in placement order. Silent
  // replicas and blocks failing their digest are skipped and recorded.
  GetResult get_block(const std::string& requester, const BlockKey& key);

  // Fallback of last resort; counted separately. Empty when the source is
  // gone or silent.
  std::optional<Bytes> source_block(const std::string& file_id,
                                    std::uint32_t index);

  std::optional<Bytes> original_ciphertext(const std::string& file_id) const;

  // diagnostics and test support
  std::uint64_t rejected_uploads(const std::string& submitter) const;
  const std::map<std::string, std::uint64_t>& rejected_uploads() const {
    return rejected_;
  }
  std::uint64_t total_rejected() const;
  std::uint64_t source_fallbacks() const { return source_fallbacks_; }
  const std::map<std::string, std::uint64_t>& unresponsive_replicas() const {
    return unresponsive_;
  }
  const std::map<std::string, std::uint64_t>& corrupt_providers() const {
    return corrupt_;
  }

  bool node_holds(const std::string& id, const BlockKey& key) const;
  std::size_t stored_block_count() const;
  // Every stored block must trace back to an announcement and match its
  // digest; returns the offending keys.
  std::vector<std::string> audit_stores() const;

  // Fault injection: overwrite one byte of a stored block without fixing the
  // digest, modelling a replica that serves false data.
  void tamper_block(const std::string& id, const BlockKey& key);

  nlohmann::json dump() const;

 private:
  struct Node {
    Behavior behavior = Behavior::Honest;
    std::map<std::string, StoredBlock> blocks;  // by key.str()
  };

  std::size_t replication_;
  std::size_t block_size_;
  std::map<std::string, Node> nodes_;
  std::map<std::string, std::uint32_t> announced_;  // file_id -> block count
  struct Original {
    std::string source;
    Bytes ciphertext;
  };
  std::map<std::string, Original> originals_;
  std::map<std::string, std::uint64_t> rejected_;
  std::map<std::string, std::uint64_t> unresponsive_;
  std::map<std::string, std::uint64_t> corrupt_;
  std::uint64_t source_fallbacks_ = 0;
};

}  // namespace pool::store
