#include "pool/messaging.hpp"

#include <sodium.h>

#include "pool/errors.hpp"
#include "pool/xml.hpp"

namespace pool::msg {

namespace {

constexpr std::size_t kSignatureSize = 64;

json scheme_to_json(const SchemeRef& s) {
  return json{{"k", s.k}, {"n", s.n}};
}

SchemeRef scheme_from_json(const json& j) {
  return SchemeRef{j.at("k").get<std::uint32_t>(),
                   j.at("n").get<std::uint32_t>()};
}

// Signature scope: command bytes plus sender and receiver ids, length-framed
// so a signed payload cannot be replayed under a different addressing.
Bytes signed_scope(ByteView command_bytes, const std::string& sender_id,
                   const std::vector<std::string>& receiver_ids) {
  Bytes scope;
  auto put_u32 = [&scope](std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
      scope.push_back(static_cast<std::uint8_t>((v >> shift) & 0xffu));
    }
  };
  auto put_str = [&](const std::string& s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    scope.insert(scope.end(), s.begin(), s.end());
  };
  put_u32(static_cast<std::uint32_t>(command_bytes.size()));
  scope.insert(scope.end(), command_bytes.begin(), command_bytes.end());
  put_str(sender_id);
  put_u32(static_cast<std::uint32_t>(receiver_ids.size()));
  for (const auto& id : receiver_ids) put_str(id);
  return scope;
}

std::vector<std::string> receiver_ids_of(const MessageEnvelope& envelope) {
  std::vector<std::string> ids;
  ids.reserve(envelope.receivers.size());
  for (const auto& r : envelope.receivers) ids.push_back(r.id);
  return ids;
}

Bytes command_bytes(const Command& command) {
  return to_bytes(command_to_json(command).dump());
}

Command decode_signed_blob(ByteView blob, const std::string& sender_id,
                           const std::vector<std::string>& receiver_ids,
                           const crypto::Directory& directory) {
  if (blob.size() < kSignatureSize) {
    throw ForgedMessage("payload shorter than a signature");
  }
  const ByteView signature = blob.subspan(0, kSignatureSize);
  const ByteView body = blob.subspan(kSignatureSize);
  const Bytes scope = signed_scope(body, sender_id, receiver_ids);
  if (!crypto::verify(directory.at(sender_id).sign_pk, scope, signature)) {
    throw ForgedMessage("signature does not match header sender " + sender_id);
  }
  json parsed;
  try {
    parsed = json::parse(to_string(body));
  } catch (const json::exception& e) {
    throw ParseError(std::string("command body: ") + e.what());
  }
  return command_from_json(parsed);
}

}  // namespace

json command_to_json(const Command& command) {
  json j;
  std::visit(
      [&j](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, FileAnnouncement>) {
          j = json{{"type", "FileAnnouncement"},
                   {"file_id", c.file_id},
                   {"file_name", c.file_name},
                   {"source_node", c.source_node},
                   {"block_count", c.block_count},
                   {"metadata", c.metadata},
                   {"plaintext_digest", c.plaintext_digest},
                   {"ciphertext_digest", c.ciphertext_digest}};
        } else if constexpr (std::is_same_v<T, ShareDistribution>) {
          j = json{{"type", "ShareDistribution"},
                   {"file_id", c.file_id},
                   {"version", c.version},
                   {"scheme", scheme_to_json(c.scheme)},
                   {"share_index", c.share_index},
                   {"share_value", to_base64(c.share_value)}};
        } else if constexpr (std::is_same_v<T, ShareLookupList>) {
          json assignments = json::array();
          for (const auto& a : c.assignments) {
            assignments.push_back(
                json{{"share_index", a.share_index}, {"node_id", a.node_id}});
          }
          j = json{{"type", "ShareLookupList"},
                   {"file_id", c.file_id},
                   {"version", c.version},
                   {"assignments", assignments}};
        } else if constexpr (std::is_same_v<T, ShareDigestBroadcast>) {
          json digests = json::array();
          for (const auto& d : c.digests) {
            digests.push_back(json{{"share_index", d.share_index},
                                   {"digest_hex", d.digest_hex}});
          }
          j = json{{"type", "ShareDigestBroadcast"},
                   {"file_id", c.file_id},
                   {"version", c.version},
                   {"digests", digests}};
        } else if constexpr (std::is_same_v<T, ShareRequest>) {
          j = json{{"type", "ShareRequest"},
                   {"file_id", c.file_id},
                   {"version", c.version},
                   {"message_reference", c.message_reference}};
        } else if constexpr (std::is_same_v<T, ShareResponse>) {
          j = json{{"type", "ShareResponse"},
                   {"file_id", c.file_id},
                   {"version", c.version},
                   {"share_index", c.share_index},
                   {"share_value", to_base64(c.share_value)},
                   {"message_reference", c.message_reference}};
        } else if constexpr (std::is_same_v<T, ShareVersionUpdate>) {
          j = json{{"type", "ShareVersionUpdate"},
                   {"file_id", c.file_id},
                   {"version", c.version},
                   {"scheme", scheme_to_json(c.scheme)},
                   {"revoked", c.revoked}};
        }
      },
      command);
  return j;
}

Command command_from_json(const json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "FileAnnouncement") {
      FileAnnouncement c;
      c.file_id = j.at("file_id").get<std::string>();
      c.file_name = j.at("file_name").get<std::string>();
      c.source_node = j.at("source_node").get<std::string>();
      c.block_count = j.at("block_count").get<std::uint32_t>();
      c.metadata = j.at("metadata");
      c.plaintext_digest = j.at("plaintext_digest").get<std::string>();
      c.ciphertext_digest = j.at("ciphertext_digest").get<std::string>();
      return c;
    }
    if (type == "ShareDistribution") {
      ShareDistribution c;
      c.file_id = j.at("file_id").get<std::string>();
      c.version = j.at("version").get<std::uint32_t>();
      c.scheme = scheme_from_json(j.at("scheme"));
      c.share_index = j.at("share_index").get<std::uint32_t>();
      c.share_value = from_base64(j.at("share_value").get<std::string>());
      return c;
    }
    if (type == "ShareLookupList") {
      ShareLookupList c;
      c.file_id = j.at("file_id").get<std::string>();
      c.version = j.at("version").get<std::uint32_t>();
      for (const auto& a : j.at("assignments")) {
        c.assignments.push_back(
            ShareAssignment{a.at("share_index").get<std::uint32_t>(),
                            a.at("node_id").get<std::string>()});
      }
      return c;
    }
    if (type == "ShareDigestBroadcast") {
      ShareDigestBroadcast c;
      c.file_id = j.at("file_id").get<std::string>();
      c.version = j.at("version").get<std::uint32_t>();
      for (const auto& d : j.at("digests")) {
        c.digests.push_back(
            ShareDigestEntry{d.at("share_index").get<std::uint32_t>(),
                             d.at("digest_hex").get<std::string>()});
      }
      return c;
    }
    if (type == "ShareRequest") {
      ShareRequest c;
      c.file_id = j.at("file_id").get<std::string>();
      c.version = j.at("version").get<std::uint32_t>();
      c.message_reference = j.at("message_reference").get<std::string>();
      return c;
    }
    if (type == "ShareResponse") {
      ShareResponse c;
      c.file_id = j.at("file_id").get<std::string>();
      c.version = j.at("version").get<std::uint32_t>();
      c.share_index = j.at("share_index").get<std::uint32_t>();
      c.share_value = from_base64(j.at("share_value").get<std::string>());
      c.message_reference = j.at("message_reference").get<std::string>();
      return c;
    }
    if (type == "ShareVersionUpdate") {
      ShareVersionUpdate c;
      c.file_id = j.at("file_id").get<std::string>();
      c.version = j.at("version").get<std::uint32_t>();
      c.scheme = scheme_from_json(j.at("scheme"));
      c.revoked = j.at("revoked").get<bool>();
      return c;
    }
    throw ParseError("unknown command type \"" + type + "\"");
  } catch (const json::exception& e) {
    throw ParseError(std::string("command: ") + e.what());
  }
}

std::string command_type_name(const Command& command) {
  return command_to_json(command).at("type").get<std::string>();
}

std::string make_message_reference(Rng& rng) {
  return to_hex(rng.bytes(16));
}

MessageEnvelope build_broadcast(const crypto::NodeIdentity& sender,
                                const Command& command) {
  const Bytes body = command_bytes(command);
  const Bytes signature = crypto::sign(sender, signed_scope(body, sender.id, {}));

  MessageEnvelope envelope;
  envelope.sender_id = sender.id;
  envelope.payload.reserve(signature.size() + body.size());
  envelope.payload.insert(envelope.payload.end(), signature.begin(),
                          signature.end());
  envelope.payload.insert(envelope.payload.end(), body.begin(), body.end());
  return envelope;
}

MessageEnvelope build_sealed(
    const crypto::NodeIdentity& sender,
    const std::vector<std::pair<std::string, Bytes>>& recipients,
    const Command& command, Rng& rng) {
  if (recipients.empty()) throw Error("sealed message needs recipients");

  std::vector<std::string> receiver_ids;
  receiver_ids.reserve(recipients.size());
  for (const auto& [id, pk] : recipients) receiver_ids.push_back(id);

  const Bytes body = command_bytes(command);
  const Bytes signature =
      crypto::sign(sender, signed_scope(body, sender.id, receiver_ids));

  Bytes inner;
  inner.reserve(signature.size() + body.size());
  inner.insert(inner.end(), signature.begin(), signature.end());
  inner.insert(inner.end(), body.begin(), body.end());

  const crypto::SymmetricKey message_key = crypto::generate_key(rng);

  MessageEnvelope envelope;
  envelope.sender_id = sender.id;
  envelope.sender_key =
      crypto::wrap_key(sender.encryption.public_key, message_key, rng);
  for (const auto& [id, enc_pk] : recipients) {
    envelope.receivers.push_back(
        WrappedKeyEntry{id, crypto::wrap_key(enc_pk, message_key, rng)});
  }
  envelope.payload = crypto::encrypt(message_key, inner, rng).serialize();
  return envelope;
}

std::optional<Command> open(const MessageEnvelope& envelope,
                            const crypto::NodeIdentity& me,
                            const crypto::Directory& directory) {
  if (envelope.is_broadcast()) {
    return decode_signed_blob(envelope.payload, envelope.sender_id, {},
                              directory);
  }

  const Bytes* wrapped = nullptr;
  if (envelope.sender_id == me.id && envelope.sender_key) {
    wrapped = &*envelope.sender_key;
  } else {
    for (const auto& r : envelope.receivers) {
      if (r.id == me.id) {
        wrapped = &r.wrapped_key;
        break;
      }
    }
  }
  if (wrapped == nullptr) return std::nullopt;

  crypto::SymmetricKey message_key;
  try {
    message_key = crypto::unwrap_key(me.encryption, *wrapped);
  } catch (const UnwrapFailure& e) {
    throw CorruptWrappedKey(e.what());
  }

  Bytes inner;
  try {
    inner = crypto::decrypt(message_key,
                            crypto::Ciphertext::deserialize(envelope.payload));
  } catch (const Error& e) {
    throw CorruptWrappedKey(std::string("payload does not decrypt: ") +
                            e.what());
  }
  return decode_signed_blob(inner, envelope.sender_id,
                            receiver_ids_of(envelope), directory);
}

Command open_broadcast(const MessageEnvelope& envelope,
                       const crypto::Directory& directory) {
  if (!envelope.is_broadcast()) {
    throw Error("open_broadcast on a sealed envelope");
  }
  return decode_signed_blob(envelope.payload, envelope.sender_id, {},
                            directory);
}

std::string serialize_xml(const MessageEnvelope& envelope) {
  xml::Element sender_id_el;
  sender_id_el.name = "ID";
  if (envelope.sender_key) {
    sender_id_el.attributes.emplace_back("Key",
                                         to_base64(*envelope.sender_key));
  }
  sender_id_el.text = to_base64(to_bytes(envelope.sender_id));

  xml::Element sender;
  sender.name = "Sender";
  sender.children.push_back(std::move(sender_id_el));

  xml::Element receiver;
  receiver.name = "Receiver";
  for (const auto& r : envelope.receivers) {
    xml::Element id_el;
    id_el.name = "ID";
    id_el.attributes.emplace_back("Key", to_base64(r.wrapped_key));
    id_el.text = to_base64(to_bytes(r.id));
    receiver.children.push_back(std::move(id_el));
  }

  xml::Element version;
  version.name = "Version";
  version.text = envelope.version;

  xml::Element header;
  header.name = "Header";
  header.children.push_back(std::move(version));
  header.children.push_back(std::move(sender));
  header.children.push_back(std::move(receiver));

  xml::Element payload;
  payload.name = "Payload";
  payload.text = to_base64(envelope.payload);

  xml::Element root;
  root.name = "MessageStructure";
  root.children.push_back(std::move(header));
  root.children.push_back(std::move(payload));
  return xml::serialize(root);
}

MessageEnvelope parse_xml(std::string_view xml_text) {
  const xml::Element root = xml::parse(xml_text);
  if (root.name != "MessageStructure") {
    throw ParseError("document element must be MessageStructure");
  }
  const xml::Element* header = root.find("Header");
  if (header == nullptr) throw ParseError("missing Header");
  const xml::Element* version = header->find("Version");
  if (version == nullptr) throw ParseError("missing Header/Version");
  const xml::Element* sender = header->find("Sender");
  if (sender == nullptr) throw ParseError("missing Header/Sender");
  const xml::Element* sender_id = sender->find("ID");
  if (sender_id == nullptr) throw ParseError("missing Sender/ID");
  const xml::Element* receiver = header->find("Receiver");
  if (receiver == nullptr) throw ParseError("missing Header/Receiver");
  const xml::Element* payload = root.find("Payload");
  if (payload == nullptr) throw ParseError("missing Payload");

  MessageEnvelope envelope;
  envelope.version = version->text;
  envelope.sender_id = to_string(from_base64(sender_id->text));
  if (const std::string* key = sender_id->attribute("Key")) {
    envelope.sender_key = from_base64(*key);
  }
  for (const auto& id_el : receiver->children) {
    if (id_el.name != "ID") throw ParseError("unexpected <" + id_el.name + "> in Receiver");
    const std::string* key = id_el.attribute("Key");
    if (key == nullptr) throw ParseError("Receiver/ID missing Key attribute");
    envelope.receivers.push_back(
        WrappedKeyEntry{to_string(from_base64(id_el.text)), from_base64(*key)});
  }
  envelope.payload = from_base64(payload->text);
  return envelope;
}

}  // namespace pool::msg
