#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pool/chain.hpp"
#include "pool/crypto.hpp"
#include "pool/messaging.hpp"
#include "pool/secret_sharing.hpp"

namespace pool::audit {

enum class EventKind {
  FileAnnounced,
  ShareDistributed,
  ShareRequested,
  ShareResponded,
  AccessProven,
  VersionUpdated,
  Revoked,
  ForgedUpdateRejected,
};

std::string event_kind_name(EventKind kind);

struct AuditEvent {
  EventKind kind = EventKind::FileAnnounced;
  std::string actor;
  std::string file_id;
  std::uint32_t version = 0;
  std::uint64_t block_height = 0;
  std::vector<std::string> txids;
  std::string message_reference;

  nlohmann::json to_json() const;
  bool operator==(const AuditEvent&) const = default;
};

// Public facts harvested from broadcast commands while replaying.
struct HarvestedFile {
  msg::FileAnnouncement announcement;
  // version -> share index -> holder id
  std::map<std::uint32_t, std::map<std::uint32_t, std::string>> lookups;
  std::map<std::uint32_t, sharing::ShareDigestList> digest_lists;
  std::map<std::uint32_t, msg::SchemeRef> schemes;
  std::set<std::uint32_t> revoked_versions;
  // recipients of sealed hand-outs, per version (covers pseudo versions that
  // never get a lookup list)
  std::map<std::uint32_t, std::set<std::string>> distributed_holders;
};

struct RequestRecord {
  std::string requester;
  std::string file_id;
  std::uint32_t version = 0;
  std::string reference;
  std::uint64_t block_height = 0;
  std::set<std::string> responders;
  std::map<std::string, std::uint64_t> response_heights;
  bool proven = false;
};

struct ReplayResult {
  std::vector<AuditEvent> events;
  std::map<std::string, HarvestedFile> files;
  std::map<std::string, RequestRecord> requests;  // by reference
  // sealed response envelopes per reference, for the denial procedure
  std::map<std::string, std::vector<msg::MessageEnvelope>> response_envelopes;
  struct Diagnostics {
    std::uint64_t forged_messages = 0;
    std::uint64_t unclassified_sealed = 0;
    std::uint64_t incomplete_chains = 0;
  } diagnostics;
};

// Replays the chain into the deterministic event stream. The auditor opens
// only broadcasts; sealed traffic is classified from headers plus the public
// lookup lists. With include_retained, reverted branches count as evidence.
ReplayResult replay(const chain::Ledger& ledger,
                    const crypto::Directory& directory,
                    bool include_retained = false);

// node id -> block height of its first proven access to the file.
std::map<std::string, std::uint64_t> first_access_report(
    std::span<const AuditEvent> events, const std::string& file_id);

enum class Offense { WrongShare, SilentHolder, ForgedUpdate, JunkUpload };

std::string offense_name(Offense offense);

struct OffenseRecord {
  std::string node_id;
  Offense offense = Offense::WrongShare;
  std::string file_id;
  std::string message_reference;
  std::uint64_t count = 1;

  nlohmann::json to_json() const;
  bool operator==(const OffenseRecord&) const = default;
};

struct DisclosedShare {
  std::uint32_t share_index = 0;
  Bytes value;
  std::string responder;
};

// reference -> shares as the requester received them
using DisclosureSet = std::map<std::string, std::vector<DisclosedShare>>;

std::vector<OffenseRecord> identify_malicious(
    const ReplayResult& replayed, const DisclosureSet& disclosures,
    const std::map<std::string, std::uint64_t>& rejected_uploads,
    std::uint64_t round_budget);

// A node disputing a proven access discloses either its private decryption
// key or the share values it claims to have received.
struct DenialClaim {
  std::string claimant;
  std::string file_id;
  std::string message_reference;
  std::optional<Bytes> private_decryption_key;
  std::vector<sharing::SecretShare> disclosed_shares;

  nlohmann::json to_json() const;
  static DenialClaim from_json(const nlohmann::json& j);  // throws ParseError
};

enum class DenialVerdict { Upheld, Refuted };

struct DenialResult {
  DenialVerdict verdict = DenialVerdict::Upheld;
  std::vector<std::string> transcript;
};

using CiphertextProvider =
    std::function<std::optional<Bytes>(const std::string& file_id)>;

// Re-runs the disputed reconstruction from the ledger evidence. Refuted when
// a key emerges that decrypts the file to its announced digest; Upheld when
// the messages do not decode or no subset of the shares validates.
// Throws EvidenceIncomplete when the claim cannot be replayed at all.
DenialResult verify_denial(const DenialClaim& claim,
                           const chain::Ledger& ledger,
                           const crypto::Directory& directory,
                           const CiphertextProvider& ciphertext_for);

// Reads ciphertexts out of a block-store dump: the source's original if
// present, otherwise assembled from replica blocks.
CiphertextProvider ciphertext_from_store_dump(nlohmann::json dump);

// Directory sidecar helpers (public keys only).
nlohmann::json directory_to_json(const crypto::Directory& directory);
crypto::Directory directory_from_json(const nlohmann::json& j);

}  // namespace pool::audit
