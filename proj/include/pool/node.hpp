#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pool/block_store.hpp"
#include "pool/chain.hpp"
#include "pool/crypto.hpp"
#include "pool/messaging.hpp"
#include "pool/secret_sharing.hpp"

namespace pool::node {

using store::Behavior;

// Announced identity of a pooled file. The plaintext digest pins what the
// denial procedure has to reproduce; the ciphertext digest lets a downloader
// verify the assembled blocks before asking for any shares.
struct FileManifest {
  std::string file_id;
  std::string file_name;
  std::string source_node;
  std::uint32_t block_count = 0;
  nlohmann::json metadata = nlohmann::json::object();
  crypto::Digest plaintext_digest;
  crypto::Digest ciphertext_digest;

  msg::FileAnnouncement to_announcement() const;
  static FileManifest from_announcement(const msg::FileAnnouncement& a);
};

struct FetchOutcome {
  enum class Status {
    Ok,
    BlocksUnavailable,
    InsufficientResponses,
    ReconstructionImpossible,
  };

  std::string file_id;
  Status status = Status::Ok;
  bool from_cache = false;
  Bytes plaintext;  // empty unless Ok
  std::string message_reference;
  std::uint32_t version = 0;
  std::uint32_t responses_received = 0;
  std::vector<std::uint32_t> bad_share_indices;
  // share values as received, for digest checks and denial evidence
  std::vector<std::tuple<std::uint32_t, Bytes, std::string>> received_shares;
  std::uint64_t completed_round = 0;
};

std::string fetch_status_name(FetchOutcome::Status status);

enum class AcquisitionKind { Publish, Fetch, Collusion };

struct Acquisition {
  std::string node_id;
  std::string file_id;
  std::uint64_t round = 0;
  AcquisitionKind kind = AcquisitionKind::Fetch;
  std::string message_reference;  // fetch only
};

struct Counters {
  std::uint64_t messages = 0;
  std::uint64_t transactions = 0;
  std::uint64_t blocks = 0;
  std::uint64_t rejected_blocks = 0;
  std::uint64_t source_fallbacks = 0;
  std::uint64_t forged_dropped = 0;
};

// Everything a node touches when it acts: the shared ledger, the block
// network, the identity directory, the seeded randomness and the round clock.
struct Services {
  chain::Ledger& ledger;
  store::DhtNetwork& dht;
  const crypto::Directory& directory;
  Rng& rng;
  std::uint64_t round = 0;
  std::vector<std::string> active_nodes;  // canonical (sorted) ids
  Counters& counters;
  std::function<void(const Acquisition&)> record_acquisition;
};

// Per-partner node: publishes files, fetches and decrypts them, answers
// share requests, reissues versions, revokes files. Every side effect goes
// through Services, so a scenario seed pins the whole execution.
class PoolNode {
 public:
  PoolNode(crypto::NodeIdentity identity, Behavior behavior)
      : identity_(std::move(identity)), behavior_(behavior) {}

  const crypto::NodeIdentity& identity() const { return identity_; }
  const std::string& id() const { return identity_.id; }
  Behavior behavior() const { return behavior_; }

  FileManifest publish(Services& services, const std::string& file_name,
                       Bytes content, nlohmann::json metadata);

  // Cached files return an outcome immediately with zero ledger traffic;
  // otherwise gathers blocks now and opens a share request that finish_round
  // resolves once enough responses arrived or the budget ran out.
  std::optional<FetchOutcome> begin_fetch(Services& services,
                                          const std::string& file_id,
                                          std::uint64_t round_budget);

  void handle_incoming(Services& services, const msg::MessageEnvelope& envelope);

  // Completion and deadline checks for open fetches; called once per round
  // after delivery.
  void finish_round(Services& services);

  std::uint32_t reissue_shares(Services& services, const std::string& file_id);
  std::uint32_t revoke(Services& services, const std::string& file_id);

  // ---- state inspection ----
  const std::map<std::string, FileManifest>& manifests() const {
    return manifests_;
  }
  bool has_plaintext(const std::string& file_id) const {
    return files_local_.count(file_id) != 0;
  }
  const Bytes& plaintext(const std::string& file_id) const {
    return files_local_.at(file_id);
  }
  std::optional<sharing::SecretShare> held_share(const std::string& file_id,
                                                 std::uint32_t version) const;
  const std::vector<FetchOutcome>& fetch_outcomes() const { return outcomes_; }
  std::optional<std::uint32_t> newest_version(const std::string& file_id) const;
  bool version_revoked(const std::string& file_id, std::uint32_t version) const;
  struct VersionView {
    std::uint32_t version = 0;
    std::uint32_t k = 0;
    std::uint32_t n = 0;
    bool revoked = false;
  };
  std::optional<VersionView> version_view(const std::string& file_id) const;
  const std::map<std::string,
                 std::map<std::uint32_t, sharing::ShareDigestList>>&
  digest_lists() const {
    return digest_lists_;
  }
  std::size_t open_fetch_count() const { return pending_.size(); }

  // Scripted cheat path for collusion scenarios: plaintext obtained without
  // any protocol interaction. The caller records the acquisition.
  void inject_plaintext(const std::string& file_id, Bytes plaintext) {
    files_local_[file_id] = std::move(plaintext);
  }

 private:
  struct VersionInfo {
    std::uint32_t version = 0;
    std::uint32_t k = 0;
    std::uint32_t n = 0;
    bool revoked = false;
  };

  struct PendingFetch {
    std::string file_id;
    std::uint32_t version = 0;
    std::uint32_t k = 0;
    std::uint32_t n = 0;
    std::string reference;
    std::uint64_t deadline_round = 0;
    Bytes ciphertext;
    std::map<std::uint32_t, std::pair<Bytes, std::string>> responses;
  };

  void submit_envelope(Services& services, const msg::MessageEnvelope& envelope);
  void distribute_shares(Services& services, const FileManifest& manifest,
                         const sharing::ShareScheme& scheme,
                         const std::vector<sharing::SecretShare>& shares,
                         bool include_lookup_and_digests);
  void observe_version(const std::string& file_id, std::uint32_t version,
                       std::uint32_t k, std::uint32_t n, bool revoked);
  void on_share_request(Services& services, const std::string& requester,
                        const msg::ShareRequest& request);
  void try_complete(Services& services, PendingFetch& fetch);
  void finalize(Services& services, const PendingFetch& fetch,
                FetchOutcome::Status status,
                std::vector<std::uint32_t> bad_indices, Bytes plaintext);
  std::optional<Bytes> gather_ciphertext(Services& services,
                                         const FileManifest& manifest);

  crypto::NodeIdentity identity_;
  Behavior behavior_;

  std::map<std::string, FileManifest> manifests_;
  std::map<std::string, Bytes> files_local_;
  struct OwnKey {
    crypto::SymmetricKey key;
    sharing::ShareScheme scheme;
    bool revoked = false;
  };
  std::map<std::string, OwnKey> keys_local_;  // own files only
  std::map<std::pair<std::string, std::uint32_t>, sharing::SecretShare>
      share_store_;
  std::map<std::string, std::map<std::uint32_t, msg::ShareLookupList>> lookup_;
  std::map<std::string, std::map<std::uint32_t, sharing::ShareDigestList>>
      digest_lists_;
  std::map<std::string, VersionInfo> versions_;  // newest per file
  std::vector<PendingFetch> pending_;
  std::vector<FetchOutcome> outcomes_;
};

}  // namespace pool::node
