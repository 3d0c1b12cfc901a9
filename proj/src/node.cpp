#include "pool/node.hpp"

#include <algorithm>

#include "pool/errors.hpp"

namespace pool::node {

using msg::Command;
using msg::MessageEnvelope;
using sharing::SecretShare;
using sharing::ShareScheme;

msg::FileAnnouncement FileManifest::to_announcement() const {
  msg::FileAnnouncement a;
  a.file_id = file_id;
  a.file_name = file_name;
  a.source_node = source_node;
  a.block_count = block_count;
  a.metadata = metadata;
  a.plaintext_digest = plaintext_digest.hex();
  a.ciphertext_digest = ciphertext_digest.hex();
  return a;
}

FileManifest FileManifest::from_announcement(const msg::FileAnnouncement& a) {
  FileManifest m;
  m.file_id = a.file_id;
  m.file_name = a.file_name;
  m.source_node = a.source_node;
  m.block_count = a.block_count;
  m.metadata = a.metadata;
  m.plaintext_digest = crypto::Digest::from_hex(a.plaintext_digest);
  m.ciphertext_digest = crypto::Digest::from_hex(a.ciphertext_digest);
  return m;
}

std::string fetch_status_name(FetchOutcome::Status status) {
  switch (status) {
    case FetchOutcome::Status::Ok: return "ok";
    case FetchOutcome::Status::BlocksUnavailable: return "blocks_unavailable";
    case FetchOutcome::Status::InsufficientResponses:
      return "insufficient_responses";
    case FetchOutcome::Status::ReconstructionImpossible:
      return "reconstruction_impossible";
  }
  throw Error("unreachable fetch status");
}

void PoolNode::submit_envelope(Services& services,
                               const MessageEnvelope& envelope) {
  const std::string xml_text = msg::serialize_xml(envelope);
  const auto txids = services.ledger.submit(id(), to_bytes(xml_text));
  ++services.counters.messages;
  services.counters.transactions += txids.size();
}

void PoolNode::observe_version(const std::string& file_id,
                               std::uint32_t version, std::uint32_t k,
                               std::uint32_t n, bool revoked) {
  auto& info = versions_[file_id];
  if (version < info.version) return;  // stale news
  if (version > info.version) {
    info = VersionInfo{version, k, n, revoked};
    return;
  }
  if (k != 0) info.k = k;
  if (n != 0) info.n = n;
  info.revoked = info.revoked || revoked;
}

FileManifest PoolNode::publish(Services& services, const std::string& file_name,
                               Bytes content, nlohmann::json metadata) {
  if (content.empty()) throw EmptyFile(file_name);

  const auto k = static_cast<std::uint32_t>(services.active_nodes.size());
  const crypto::SymmetricKey key = crypto::generate_key(services.rng);
  const ShareScheme scheme = ShareScheme::derive(k, 1, services.rng);

  FileManifest manifest;
  manifest.file_id = to_hex(services.rng.bytes(16));
  manifest.file_name = file_name;
  manifest.source_node = id();
  manifest.metadata = std::move(metadata);
  manifest.plaintext_digest = crypto::hash(content);

  const Bytes ciphertext = crypto::encrypt(key, content, services.rng).serialize();
  manifest.ciphertext_digest = crypto::hash(ciphertext);
  const auto blocks = store::chunk(ciphertext, services.dht.block_size());
  manifest.block_count = static_cast<std::uint32_t>(blocks.size());

  // The announcement is the prior notification that makes peers accept the
  // uploads that follow.
  submit_envelope(services,
                  msg::build_broadcast(identity_, manifest.to_announcement()));
  services.dht.observe_announcement(manifest.file_id, manifest.block_count);
  services.dht.register_original(manifest.file_id, id(), ciphertext);
  for (std::uint32_t index = 0; index < blocks.size(); ++index) {
    const store::BlockKey block_key{manifest.file_id, index};
    services.dht.put_block(id(), block_key, blocks[index],
                           crypto::hash(blocks[index]));
  }

  const auto shares = sharing::split(key, manifest.file_id, scheme, services.rng);
  distribute_shares(services, manifest, scheme, shares, true);

  manifests_[manifest.file_id] = manifest;
  files_local_[manifest.file_id] = std::move(content);
  keys_local_[manifest.file_id] = OwnKey{key, scheme, false};
  observe_version(manifest.file_id, scheme.version, scheme.k, scheme.n, false);
  services.record_acquisition(Acquisition{
      id(), manifest.file_id, services.round, AcquisitionKind::Publish, ""});
  return manifest;
}

void PoolNode::distribute_shares(Services& services,
                                 const FileManifest& manifest,
                                 const ShareScheme& scheme,
                                 const std::vector<SecretShare>& shares,
                                 bool include_lookup_and_digests) {
  // Assignment rule: share i goes to the i-th node in canonical id order.
  const auto& nodes = services.active_nodes;
  if (nodes.size() != shares.size()) {
    throw Error("share count does not match pool size");
  }

  for (std::size_t i = 0; i < shares.size(); ++i) {
    msg::ShareDistribution dist;
    dist.file_id = manifest.file_id;
    dist.version = scheme.version;
    dist.scheme = {scheme.k, scheme.n};
    dist.share_index = shares[i].index;
    dist.share_value = shares[i].value;
    const auto& holder = nodes[i];
    submit_envelope(
        services,
        msg::build_sealed(identity_,
                          {{holder, services.directory.at(holder).enc_pk}},
                          dist, services.rng));
  }

  if (!include_lookup_and_digests) return;

  msg::ShareLookupList lookup;
  lookup.file_id = manifest.file_id;
  lookup.version = scheme.version;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    lookup.assignments.push_back({shares[i].index, nodes[i]});
  }
  submit_envelope(services, msg::build_broadcast(identity_, lookup));

  msg::ShareDigestBroadcast digests;
  digests.file_id = manifest.file_id;
  digests.version = scheme.version;
  for (const auto& share : shares) {
    digests.digests.push_back({share.index, crypto::hash(share.value).hex()});
  }
  submit_envelope(services, msg::build_broadcast(identity_, digests));
}

std::optional<Bytes> PoolNode::gather_ciphertext(Services& services,
                                                 const FileManifest& manifest) {
  auto fetch_all = [&](bool source_only) -> std::optional<Bytes> {
    Bytes assembled;
    for (std::uint32_t index = 0; index < manifest.block_count; ++index) {
      const store::BlockKey key{manifest.file_id, index};
      std::optional<Bytes> data;
      if (!source_only) {
        auto result = services.dht.get_block(id(), key);
        data = std::move(result.data);
      }
      if (!data) {
        data = services.dht.source_block(manifest.file_id, index);
      }
      if (!data) return std::nullopt;
      assembled.insert(assembled.end(), data->begin(), data->end());
    }
    if (crypto::hash(assembled) != manifest.ciphertext_digest) {
      return std::nullopt;
    }
    return assembled;
  };

  if (auto assembled = fetch_all(false)) return assembled;
  // replicas failed or lied; last resort is the original at the source
  return fetch_all(true);
}

std::optional<FetchOutcome> PoolNode::begin_fetch(Services& services,
                                                  const std::string& file_id,
                                                  std::uint64_t round_budget) {
  // Only the first access needs the protocol; a cached file is served as-is.
  if (auto cached = files_local_.find(file_id); cached != files_local_.end()) {
    FetchOutcome outcome;
    outcome.file_id = file_id;
    outcome.status = FetchOutcome::Status::Ok;
    outcome.from_cache = true;
    outcome.plaintext = cached->second;
    outcome.completed_round = services.round;
    outcomes_.push_back(outcome);
    return outcome;
  }

  auto manifest_it = manifests_.find(file_id);
  if (manifest_it == manifests_.end()) {
    throw Error("no manifest for file " + file_id);
  }
  const FileManifest& manifest = manifest_it->second;

  auto version_it = versions_.find(file_id);
  if (version_it == versions_.end()) {
    throw Error("no version information for file " + file_id);
  }
  const VersionInfo& version = version_it->second;

  PendingFetch fetch;
  fetch.file_id = file_id;
  fetch.version = version.version;
  fetch.k = version.k;
  fetch.n = version.n;
  fetch.reference = msg::make_message_reference(services.rng);
  fetch.deadline_round = services.round + round_budget;

  auto ciphertext = gather_ciphertext(services, manifest);
  if (!ciphertext) {
    FetchOutcome outcome;
    outcome.file_id = file_id;
    outcome.status = FetchOutcome::Status::BlocksUnavailable;
    outcome.completed_round = services.round;
    outcomes_.push_back(outcome);
    return outcome;
  }
  fetch.ciphertext = std::move(*ciphertext);

  msg::ShareRequest request;
  request.file_id = file_id;
  request.version = fetch.version;
  request.message_reference = fetch.reference;
  submit_envelope(services, msg::build_broadcast(identity_, request));

  pending_.push_back(std::move(fetch));
  return std::nullopt;
}

void PoolNode::on_share_request(Services& services,
                                const std::string& requester,
                                const msg::ShareRequest& request) {
  if (behavior_ == Behavior::Silent) return;
  auto held = share_store_.find({request.file_id, request.version});
  if (held == share_store_.end()) return;

  msg::ShareResponse response;
  response.file_id = request.file_id;
  response.version = request.version;
  response.share_index = held->second.index;
  response.share_value = held->second.value;
  response.message_reference = request.message_reference;
  if (behavior_ == Behavior::WrongShare) {
    for (auto& b : response.share_value) b ^= 0x5a;
  }
  submit_envelope(
      services,
      msg::build_sealed(identity_,
                        {{requester, services.directory.at(requester).enc_pk}},
                        response, services.rng));
}

void PoolNode::handle_incoming(Services& services,
                               const MessageEnvelope& envelope) {
  std::optional<Command> command;
  try {
    command = msg::open(envelope, identity_, services.directory);
  } catch (const ForgedMessage&) {
    ++services.counters.forged_dropped;
    return;
  } catch (const CorruptWrappedKey&) {
    // listed but unable to open: evidence for a later denial, nothing usable
    ++services.counters.forged_dropped;
    return;
  } catch (const Error&) {
    ++services.counters.forged_dropped;
    return;
  }
  if (!command) return;  // sealed, not for us
  const std::string& sender = envelope.sender_id;
  // Senders can read their own sealed messages, but only the addressed
  // recipient acts on one (the source would otherwise overwrite its own
  // share with every hand-out it sends).
  bool addressed_to_me = envelope.is_broadcast();
  for (const auto& receiver : envelope.receivers) {
    if (receiver.id == id()) addressed_to_me = true;
  }

  if (const auto* announcement = std::get_if<msg::FileAnnouncement>(&*command)) {
    if (announcement->source_node != sender) return;  // spoofed origin
    if (manifests_.count(announcement->file_id) != 0) return;
    manifests_[announcement->file_id] =
        FileManifest::from_announcement(*announcement);
    return;
  }

  if (const auto* dist = std::get_if<msg::ShareDistribution>(&*command)) {
    if (!addressed_to_me) return;
    auto manifest = manifests_.find(dist->file_id);
    if (manifest == manifests_.end() ||
        manifest->second.source_node != sender) {
      return;  // only the source hands out shares
    }
    SecretShare share;
    share.file_id = dist->file_id;
    share.index = dist->share_index;
    share.version = dist->version;
    share.value = dist->share_value;
    share_store_[{dist->file_id, dist->version}] = std::move(share);
    observe_version(dist->file_id, dist->version, dist->scheme.k,
                    dist->scheme.n, false);
    return;
  }

  if (const auto* lookup = std::get_if<msg::ShareLookupList>(&*command)) {
    auto manifest = manifests_.find(lookup->file_id);
    if (manifest == manifests_.end() ||
        manifest->second.source_node != sender) {
      return;
    }
    lookup_[lookup->file_id][lookup->version] = *lookup;
    const auto k = static_cast<std::uint32_t>(lookup->assignments.size());
    observe_version(lookup->file_id, lookup->version, k,
                    sharing::derive_threshold(k), false);
    return;
  }

  if (const auto* digests = std::get_if<msg::ShareDigestBroadcast>(&*command)) {
    auto manifest = manifests_.find(digests->file_id);
    if (manifest == manifests_.end() ||
        manifest->second.source_node != sender) {
      return;
    }
    sharing::ShareDigestList list;
    list.file_id = digests->file_id;
    list.version = digests->version;
    for (const auto& entry : digests->digests) {
      list.digests[entry.share_index] =
          crypto::Digest::from_hex(entry.digest_hex);
    }
    digest_lists_[digests->file_id][digests->version] = std::move(list);
    return;
  }

  if (const auto* request = std::get_if<msg::ShareRequest>(&*command)) {
    on_share_request(services, sender, *request);
    return;
  }

  if (const auto* response = std::get_if<msg::ShareResponse>(&*command)) {
    if (!addressed_to_me) return;
    for (auto& fetch : pending_) {
      if (fetch.reference != response->message_reference) continue;
      if (response->file_id != fetch.file_id ||
          response->version != fetch.version) {
        break;
      }
      // first answer per share index wins
      fetch.responses.emplace(response->share_index,
                              std::make_pair(response->share_value, sender));
      break;
    }
    return;
  }

  if (const auto* update = std::get_if<msg::ShareVersionUpdate>(&*command)) {
    auto manifest = manifests_.find(update->file_id);
    if (manifest == manifests_.end() ||
        manifest->second.source_node != sender) {
      return;  // forged updates are ignored; the audit layer flags them
    }
    observe_version(update->file_id, update->version, update->scheme.k,
                    update->scheme.n, update->revoked);
    return;
  }
}

void PoolNode::try_complete(Services& services, PendingFetch& fetch) {
  if (fetch.responses.size() < fetch.n) {
    if (services.round >= fetch.deadline_round) {
      finalize(services, fetch, FetchOutcome::Status::InsufficientResponses, {},
               {});
    }
    return;
  }

  const FileManifest& manifest = manifests_.at(fetch.file_id);
  const crypto::Ciphertext ciphertext =
      crypto::Ciphertext::deserialize(fetch.ciphertext);
  auto validator = [&](const crypto::SymmetricKey& key) {
    try {
      return crypto::hash(crypto::decrypt(key, ciphertext)) ==
             manifest.plaintext_digest;
    } catch (const AuthenticationFailure&) {
      return false;
    }
  };

  std::vector<SecretShare> received;
  received.reserve(fetch.responses.size());
  for (const auto& [index, value_sender] : fetch.responses) {
    SecretShare share;
    share.file_id = fetch.file_id;
    share.index = index;
    share.version = fetch.version;
    share.value = value_sender.first;
    received.push_back(std::move(share));
  }

  ShareScheme scheme;
  scheme.k = fetch.k;
  scheme.n = fetch.n;
  scheme.version = fetch.version;

  std::vector<std::uint32_t> bad_indices;
  std::optional<crypto::SymmetricKey> key;

  const sharing::ShareDigestList* digest_list = nullptr;
  if (auto per_file = digest_lists_.find(fetch.file_id);
      per_file != digest_lists_.end()) {
    if (auto it = per_file->second.find(fetch.version);
        it != per_file->second.end()) {
      digest_list = &it->second;
    }
  }

  if (digest_list != nullptr) {
    // broadcast hashes identify wrong shares without any subset search
    std::vector<SecretShare> verified;
    for (const auto& share : received) {
      bool ok = false;
      try {
        ok = sharing::verify_against_digests(share, *digest_list);
      } catch (const MissingDigest&) {
        ok = false;
      }
      if (ok) {
        verified.push_back(share);
      } else {
        bad_indices.push_back(share.index);
      }
    }
    if (verified.size() >= fetch.n) {
      const auto secret = sharing::reconstruct(verified, scheme);
      if (validator(secret.key)) key = secret.key;
    }
  } else {
    try {
      auto result = sharing::reconstruct_with_faults(received, scheme, validator);
      bad_indices = result.bad_indices;
      key = result.key;
    } catch (const ReconstructionImpossible&) {
      // fall through to retry or fail below
    }
  }

  if (!key) {
    if (services.round >= fetch.deadline_round) {
      finalize(services, fetch, FetchOutcome::Status::ReconstructionImpossible,
               std::move(bad_indices), {});
    }
    return;  // more responses may still arrive
  }

  Bytes plaintext = crypto::decrypt(*key, ciphertext);
  if (crypto::hash(plaintext) != manifest.plaintext_digest) {
    // validator accepted, so this cannot happen; treat as failure
    finalize(services, fetch, FetchOutcome::Status::ReconstructionImpossible,
             std::move(bad_indices), {});
    return;
  }
  finalize(services, fetch, FetchOutcome::Status::Ok, std::move(bad_indices),
           std::move(plaintext));
}

void PoolNode::finalize(Services& services, const PendingFetch& fetch,
                        FetchOutcome::Status status,
                        std::vector<std::uint32_t> bad_indices,
                        Bytes plaintext) {
  FetchOutcome outcome;
  outcome.file_id = fetch.file_id;
  outcome.status = status;
  outcome.message_reference = fetch.reference;
  outcome.version = fetch.version;
  outcome.responses_received =
      static_cast<std::uint32_t>(fetch.responses.size());
  outcome.bad_share_indices = std::move(bad_indices);
  outcome.completed_round = services.round;
  for (const auto& [index, value_sender] : fetch.responses) {
    outcome.received_shares.emplace_back(index, value_sender.first,
                                         value_sender.second);
  }

  if (status == FetchOutcome::Status::Ok) {
    files_local_[fetch.file_id] = plaintext;
    outcome.plaintext = std::move(plaintext);
    services.record_acquisition(Acquisition{id(), fetch.file_id,
                                            services.round,
                                            AcquisitionKind::Fetch,
                                            fetch.reference});
  }
  outcomes_.push_back(std::move(outcome));

  pending_.erase(std::find_if(pending_.begin(), pending_.end(),
                              [&fetch](const PendingFetch& p) {
                                return p.reference == fetch.reference;
                              }));
}

void PoolNode::finish_round(Services& services) {
  // finalize() erases from pending_, so iterate over a snapshot of references
  std::vector<std::string> references;
  references.reserve(pending_.size());
  for (const auto& fetch : pending_) references.push_back(fetch.reference);
  for (const auto& reference : references) {
    auto it = std::find_if(pending_.begin(), pending_.end(),
                           [&reference](const PendingFetch& p) {
                             return p.reference == reference;
                           });
    if (it != pending_.end()) try_complete(services, *it);
  }
}

std::uint32_t PoolNode::reissue_shares(Services& services,
                                       const std::string& file_id) {
  auto manifest = manifests_.find(file_id);
  if (manifest == manifests_.end() ||
      manifest->second.source_node != id()) {
    throw NotAuthorized("only the source may reissue shares");
  }
  auto& own = keys_local_.at(file_id);

  const auto k = static_cast<std::uint32_t>(services.active_nodes.size());
  const std::uint32_t version = versions_[file_id].version + 1;
  const ShareScheme scheme = ShareScheme::derive(k, version, services.rng);
  const auto shares =
      sharing::split(own.key, file_id, scheme, services.rng);
  distribute_shares(services, manifest->second, scheme, shares, true);

  msg::ShareVersionUpdate update;
  update.file_id = file_id;
  update.version = version;
  update.scheme = {scheme.k, scheme.n};
  update.revoked = false;
  submit_envelope(services, msg::build_broadcast(identity_, update));

  own.scheme = scheme;
  observe_version(file_id, version, scheme.k, scheme.n, false);
  return version;
}

std::uint32_t PoolNode::revoke(Services& services, const std::string& file_id) {
  auto manifest = manifests_.find(file_id);
  if (manifest == manifests_.end() ||
      manifest->second.source_node != id()) {
    throw NotAuthorized("only the source may revoke a file");
  }
  auto& own = keys_local_.at(file_id);

  const auto k = static_cast<std::uint32_t>(services.active_nodes.size());
  const std::uint32_t version = versions_[file_id].version + 1;
  const ShareScheme scheme = ShareScheme::derive(k, version, services.rng);

  msg::ShareVersionUpdate update;
  update.file_id = file_id;
  update.version = version;
  update.scheme = {scheme.k, scheme.n};
  update.revoked = true;
  submit_envelope(services, msg::build_broadcast(identity_, update));

  const auto pseudo =
      sharing::make_pseudo_shares(file_id, scheme, services.rng);
  distribute_shares(services, manifest->second, scheme, pseudo, false);

  own.revoked = true;
  observe_version(file_id, version, scheme.k, scheme.n, true);
  return version;
}

std::optional<SecretShare> PoolNode::held_share(const std::string& file_id,
                                                std::uint32_t version) const {
  auto it = share_store_.find({file_id, version});
  if (it == share_store_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> PoolNode::newest_version(
    const std::string& file_id) const {
  auto it = versions_.find(file_id);
  if (it == versions_.end()) return std::nullopt;
  return it->second.version;
}

std::optional<PoolNode::VersionView> PoolNode::version_view(
    const std::string& file_id) const {
  auto it = versions_.find(file_id);
  if (it == versions_.end()) return std::nullopt;
  return VersionView{it->second.version, it->second.k, it->second.n,
                     it->second.revoked};
}

bool PoolNode::version_revoked(const std::string& file_id,
                               std::uint32_t version) const {
  auto it = versions_.find(file_id);
  return it != versions_.end() && it->second.version == version &&
         it->second.revoked;
}

}  // namespace pool::node
