#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pool/bytes.hpp"
#include "pool/crypto.hpp"
#include "pool/rng.hpp"

namespace pool::msg {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Protocol commands. The vocabulary is closed; unknown types are rejected at
// parse time so ledger replay stays deterministic.
// ---------------------------------------------------------------------------

struct FileAnnouncement {
  std::string file_id;
  std::string file_name;
  std::string source_node;
  std::uint32_t block_count = 0;
  json metadata = json::object();
  std::string plaintext_digest;   // hex
  std::string ciphertext_digest;  // hex

  bool operator==(const FileAnnouncement&) const = default;
};

struct SchemeRef {
  std::uint32_t k = 0;
  std::uint32_t n = 0;

  bool operator==(const SchemeRef&) const = default;
};

// Sealed to the single node that will hold this share.
struct ShareDistribution {
  std::string file_id;
  std::uint32_t version = 1;
  SchemeRef scheme;
  std::uint32_t share_index = 0;
  Bytes share_value;

  bool operator==(const ShareDistribution&) const = default;
};

struct ShareAssignment {
  std::uint32_t share_index = 0;
  std::string node_id;

  bool operator==(const ShareAssignment&) const = default;
};

struct ShareLookupList {
  std::string file_id;
  std::uint32_t version = 1;
  std::vector<ShareAssignment> assignments;

  bool operator==(const ShareLookupList&) const = default;
};

struct ShareDigestEntry {
  std::uint32_t share_index = 0;
  std::string digest_hex;

  bool operator==(const ShareDigestEntry&) const = default;
};

struct ShareDigestBroadcast {
  std::string file_id;
  std::uint32_t version = 1;
  std::vector<ShareDigestEntry> digests;

  bool operator==(const ShareDigestBroadcast&) const = default;
};

// Plain-text broadcast; its presence on the ledger is the requester's half of
// the access proof.
struct ShareRequest {
  std::string file_id;
  std::uint32_t version = 1;
  std::string message_reference;

  bool operator==(const ShareRequest&) const = default;
};

// Sealed to the requester, echoing the reference of exactly one request.
struct ShareResponse {
  std::string file_id;
  std::uint32_t version = 1;
  std::uint32_t share_index = 0;
  Bytes share_value;
  std::string message_reference;

  bool operator==(const ShareResponse&) const = default;
};

struct ShareVersionUpdate {
  std::string file_id;
  std::uint32_t version = 1;
  SchemeRef scheme;
  bool revoked = false;

  bool operator==(const ShareVersionUpdate&) const = default;
};

using Command =
    std::variant<FileAnnouncement, ShareDistribution, ShareLookupList,
                 ShareDigestBroadcast, ShareRequest, ShareResponse,
                 ShareVersionUpdate>;

json command_to_json(const Command& command);
Command command_from_json(const json& j);  // throws ParseError

std::string command_type_name(const Command& command);

// Unique token binding a request to its replies: hex of 16 random bytes.
std::string make_message_reference(Rng& rng);

// ---------------------------------------------------------------------------
// Envelope
// ---------------------------------------------------------------------------

struct WrappedKeyEntry {
  std::string id;
  Bytes wrapped_key;

  bool operator==(const WrappedKeyEntry&) const = default;
};

// The on-ledger message. Broadcast: no receivers, payload is signature ||
// plaintext command. Sealed: sign-then-encrypt under a fresh symmetric key
// wrapped for each receiver and for the sender itself.
struct MessageEnvelope {
  std::string version = "1.0.0";
  std::string sender_id;
  std::optional<Bytes> sender_key;  // sender's own wrapped key (sealed only)
  std::vector<WrappedKeyEntry> receivers;
  Bytes payload;

  bool is_broadcast() const { return receivers.empty(); }

  bool operator==(const MessageEnvelope&) const = default;
};

MessageEnvelope build_broadcast(const crypto::NodeIdentity& sender,
                                const Command& command);

MessageEnvelope build_sealed(
    const crypto::NodeIdentity& sender,
    const std::vector<std::pair<std::string, Bytes>>& recipients,  // id, enc_pk
    const Command& command, Rng& rng);

// Opens an envelope for `me`. Returns nullopt when the envelope is sealed and
// me is neither listed nor the sender. Throws ForgedMessage when a signature
// fails, CorruptWrappedKey when a listed key does not unwrap.
std::optional<Command> open(const MessageEnvelope& envelope,
                            const crypto::NodeIdentity& me,
                            const crypto::Directory& directory);

// Broadcast-only read path for observers that are not pool nodes (the audit
// replayer). Throws ForgedMessage on bad signatures, Error if sealed.
Command open_broadcast(const MessageEnvelope& envelope,
                       const crypto::Directory& directory);

std::string serialize_xml(const MessageEnvelope& envelope);
MessageEnvelope parse_xml(std::string_view xml_text);  // throws ParseError

}  // namespace pool::msg
