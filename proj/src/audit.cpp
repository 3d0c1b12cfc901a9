#include "pool/audit.hpp"

#include <algorithm>

#include "pool/errors.hpp"

namespace pool::audit {

using chain::Block;
using msg::Command;
using msg::MessageEnvelope;

std::string event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::FileAnnounced: return "FileAnnounced";
    case EventKind::ShareDistributed: return "ShareDistributed";
    case EventKind::ShareRequested: return "ShareRequested";
    case EventKind::ShareResponded: return "ShareResponded";
    case EventKind::AccessProven: return "AccessProven";
    case EventKind::VersionUpdated: return "VersionUpdated";
    case EventKind::Revoked: return "Revoked";
    case EventKind::ForgedUpdateRejected: return "ForgedUpdateRejected";
  }
  throw Error("unreachable event kind");
}

nlohmann::json AuditEvent::to_json() const {
  nlohmann::json j{{"kind", event_kind_name(kind)},
                   {"actor", actor},
                   {"file_id", file_id},
                   {"version", version},
                   {"block_height", block_height},
                   {"txids", txids}};
  if (!message_reference.empty()) j["message_reference"] = message_reference;
  return j;
}

std::string offense_name(Offense offense) {
  switch (offense) {
    case Offense::WrongShare: return "WrongShare";
    case Offense::SilentHolder: return "SilentHolder";
    case Offense::ForgedUpdate: return "ForgedUpdate";
    case Offense::JunkUpload: return "JunkUpload";
  }
  throw Error("unreachable offense");
}

nlohmann::json OffenseRecord::to_json() const {
  nlohmann::json j{{"node_id", node_id},
                   {"offense", offense_name(offense)},
                   {"count", count}};
  if (!file_id.empty()) j["file_id"] = file_id;
  if (!message_reference.empty()) j["message_reference"] = message_reference;
  return j;
}

namespace {

struct ParsedMessage {
  chain::ReassembledMessage meta;
  MessageEnvelope envelope;
  std::size_t position = 0;
};

// Replays one coherent chain view (a branch path) into path-local results.
class PathReplay {
 public:
  PathReplay(const crypto::Directory& directory) : directory_(directory) {}

  void run(std::span<const Block> blocks, ReplayResult& out) {
    const auto reassembled = chain::reassemble(blocks);
    out.diagnostics.incomplete_chains += reassembled.incomplete.size();

    std::vector<ParsedMessage> messages;
    messages.reserve(reassembled.messages.size());
    for (std::size_t i = 0; i < reassembled.messages.size(); ++i) {
      const auto& meta = reassembled.messages[i];
      try {
        ParsedMessage parsed{meta, msg::parse_xml(to_string(meta.bytes)), i};
        messages.push_back(std::move(parsed));
      } catch (const ParseError&) {
        ++out.diagnostics.forged_messages;
      }
    }

    harvest_establishments(messages);
    for (const auto& message : messages) process(message, out);
  }

 private:
  // (file, version) -> earliest height at which the version became public
  // knowledge via a source-signed lookup list or version update.
  std::map<std::pair<std::string, std::uint32_t>, std::uint64_t> established_;
  std::map<std::string, std::string> source_of_;  // file -> source node
  std::set<std::string> emitted_versions_;        // "file#version"
  std::vector<std::string> request_order_;

  const crypto::Directory& directory_;

  static std::string version_key(const std::string& file_id,
                                 std::uint32_t version) {
    return file_id + "#" + std::to_string(version);
  }

  void harvest_establishments(const std::vector<ParsedMessage>& messages) {
    // First pass: announcements pin each file's source; lookup lists and
    // updates pin when a version became known. Sealed hand-outs mined in the
    // same block as their lookup classify correctly because establishment is
    // tracked at block granularity.
    for (const auto& message : messages) {
      if (!message.envelope.is_broadcast()) continue;
      Command command;
      try {
        command = msg::open_broadcast(message.envelope, directory_);
      } catch (const Error&) {
        continue;  // counted in the second pass
      }
      const std::string& sender = message.envelope.sender_id;
      if (const auto* a = std::get_if<msg::FileAnnouncement>(&command)) {
        if (a->source_node == sender && source_of_.count(a->file_id) == 0) {
          source_of_[a->file_id] = sender;
        }
      } else if (const auto* l = std::get_if<msg::ShareLookupList>(&command)) {
        auto source = source_of_.find(l->file_id);
        if (source != source_of_.end() && source->second == sender) {
          establish(l->file_id, l->version, message.meta.terminal_height);
        }
      } else if (const auto* u = std::get_if<msg::ShareVersionUpdate>(&command)) {
        auto source = source_of_.find(u->file_id);
        if (source != source_of_.end() && source->second == sender) {
          establish(u->file_id, u->version, message.meta.terminal_height);
        }
      }
    }
  }

  void establish(const std::string& file_id, std::uint32_t version,
                 std::uint64_t height) {
    auto key = std::make_pair(file_id, version);
    auto it = established_.find(key);
    if (it == established_.end() || height < it->second) {
      established_[key] = height;
    }
  }

  std::uint32_t scheme_n(const ReplayResult& out, const std::string& file_id,
                         std::uint32_t version) const {
    auto file = out.files.find(file_id);
    if (file == out.files.end()) return 0;
    if (auto s = file->second.schemes.find(version);
        s != file->second.schemes.end()) {
      return s->second.n;
    }
    return 0;
  }

  std::uint32_t scheme_k(const ReplayResult& out, const std::string& file_id,
                         std::uint32_t version) const {
    auto file = out.files.find(file_id);
    if (file == out.files.end()) return 0;
    if (auto s = file->second.schemes.find(version);
        s != file->second.schemes.end()) {
      return s->second.k;
    }
    return 0;
  }

  bool is_holder(const ReplayResult& out, const std::string& file_id,
                 std::uint32_t version, const std::string& node) const {
    auto file = out.files.find(file_id);
    if (file == out.files.end()) return false;
    if (auto lookup = file->second.lookups.find(version);
        lookup != file->second.lookups.end()) {
      for (const auto& [index, holder] : lookup->second) {
        if (holder == node) return true;
      }
      return false;
    }
    auto holders = file->second.distributed_holders.find(version);
    return holders != file->second.distributed_holders.end() &&
           holders->second.count(node) != 0;
  }

  void emit(ReplayResult& out, AuditEvent event) {
    out.events.push_back(std::move(event));
  }

  void process(const ParsedMessage& message, ReplayResult& out) {
    if (message.envelope.is_broadcast()) {
      process_broadcast(message, out);
    } else {
      process_sealed(message, out);
    }
  }

  void process_broadcast(const ParsedMessage& message, ReplayResult& out) {
    Command command;
    try {
      command = msg::open_broadcast(message.envelope, directory_);
    } catch (const Error&) {
      ++out.diagnostics.forged_messages;
      return;
    }
    const std::string& sender = message.envelope.sender_id;
    const std::uint64_t height = message.meta.terminal_height;

    if (const auto* a = std::get_if<msg::FileAnnouncement>(&command)) {
      if (a->source_node != sender) {
        ++out.diagnostics.forged_messages;  // claims someone else's origin
        return;
      }
      if (out.files.count(a->file_id) != 0) return;
      out.files[a->file_id].announcement = *a;
      emit(out, AuditEvent{EventKind::FileAnnounced, sender, a->file_id, 0,
                           height, message.meta.txids, ""});
      return;
    }

    if (const auto* l = std::get_if<msg::ShareLookupList>(&command)) {
      auto file = out.files.find(l->file_id);
      if (file == out.files.end() ||
          file->second.announcement.source_node != sender) {
        ++out.diagnostics.forged_messages;
        return;
      }
      auto& assignments = file->second.lookups[l->version];
      for (const auto& a : l->assignments) {
        assignments[a.share_index] = a.node_id;
      }
      if (file->second.schemes.count(l->version) == 0) {
        const auto k = static_cast<std::uint32_t>(l->assignments.size());
        file->second.schemes[l->version] =
            msg::SchemeRef{k, sharing::derive_threshold(k)};
      }
      const std::string vkey = version_key(l->file_id, l->version);
      if (emitted_versions_.insert(vkey).second) {
        emit(out, AuditEvent{EventKind::VersionUpdated, sender, l->file_id,
                             l->version, height, message.meta.txids, ""});
      }
      return;
    }

    if (const auto* d = std::get_if<msg::ShareDigestBroadcast>(&command)) {
      auto file = out.files.find(d->file_id);
      if (file == out.files.end() ||
          file->second.announcement.source_node != sender) {
        ++out.diagnostics.forged_messages;
        return;
      }
      sharing::ShareDigestList list;
      list.file_id = d->file_id;
      list.version = d->version;
      for (const auto& entry : d->digests) {
        list.digests[entry.share_index] =
            crypto::Digest::from_hex(entry.digest_hex);
      }
      file->second.digest_lists[d->version] = std::move(list);
      return;
    }

    if (const auto* r = std::get_if<msg::ShareRequest>(&command)) {
      if (out.requests.count(r->message_reference) != 0) return;
      RequestRecord record;
      record.requester = sender;
      record.file_id = r->file_id;
      record.version = r->version;
      record.reference = r->message_reference;
      record.block_height = height;
      out.requests[r->message_reference] = std::move(record);
      request_order_.push_back(r->message_reference);
      emit(out, AuditEvent{EventKind::ShareRequested, sender, r->file_id,
                           r->version, height, message.meta.txids,
                           r->message_reference});
      return;
    }

    if (const auto* u = std::get_if<msg::ShareVersionUpdate>(&command)) {
      auto file = out.files.find(u->file_id);
      if (file == out.files.end() ||
          file->second.announcement.source_node != sender) {
        emit(out,
             AuditEvent{EventKind::ForgedUpdateRejected, sender,
                        u->file_id, u->version, height, message.meta.txids, ""});
        return;
      }
      file->second.schemes[u->version] = u->scheme;
      const std::string vkey = version_key(u->file_id, u->version);
      if (u->revoked) {
        file->second.revoked_versions.insert(u->version);
        if (emitted_versions_.insert(vkey).second) {
          emit(out, AuditEvent{EventKind::Revoked, sender, u->file_id,
                               u->version, height, message.meta.txids, ""});
        }
      } else if (emitted_versions_.insert(vkey).second) {
        emit(out, AuditEvent{EventKind::VersionUpdated, sender, u->file_id,
                             u->version, height, message.meta.txids, ""});
      }
      return;
    }

    // ShareDistribution or ShareResponse as broadcast: out of protocol
    ++out.diagnostics.forged_messages;
  }

  void process_sealed(const ParsedMessage& message, ReplayResult& out) {
    if (message.envelope.receivers.size() != 1) {
      ++out.diagnostics.unclassified_sealed;
      return;
    }
    const std::string& sender = message.envelope.sender_id;
    const std::string& recipient = message.envelope.receivers[0].id;
    const std::uint64_t height = message.meta.terminal_height;

    // Response to an open request? Oldest request first, preferring one this
    // sender has not answered yet.
    RequestRecord* matched = nullptr;
    for (const auto& reference : request_order_) {
      RequestRecord& request = out.requests.at(reference);
      if (request.requester != recipient) continue;
      if (request.block_height > height) continue;
      if (!is_holder(out, request.file_id, request.version, sender)) continue;
      if (request.responders.count(sender) == 0) {
        matched = &request;
        break;
      }
      if (matched == nullptr) matched = &request;
    }
    if (matched != nullptr) {
      matched->responders.insert(sender);
      if (matched->response_heights.count(sender) == 0) {
        matched->response_heights[sender] = height;
      }
      out.response_envelopes[matched->reference].push_back(message.envelope);
      emit(out, AuditEvent{EventKind::ShareResponded, sender,
                           matched->file_id, matched->version, height,
                           message.meta.txids, matched->reference});

      const std::uint32_t n =
          scheme_n(out, matched->file_id, matched->version);
      const bool revoked =
          out.files.count(matched->file_id) != 0 &&
          out.files.at(matched->file_id)
                  .revoked_versions.count(matched->version) != 0;
      if (!matched->proven && n != 0 && !revoked &&
          matched->responders.size() >= n) {
        matched->proven = true;
        emit(out, AuditEvent{EventKind::AccessProven, matched->requester,
                             matched->file_id, matched->version, height,
                             message.meta.txids, matched->reference});
      }
      return;
    }

    // A share hand-out from a file's source to one holder, then. Candidate
    // versions must already be public knowledge at this block height and not
    // yet fully distributed.
    const HarvestedFile* best_file = nullptr;
    std::string best_file_id;
    std::uint32_t best_version = 0;
    std::uint64_t best_height = 0;
    for (auto& [file_id, file] : out.files) {
      if (file.announcement.source_node != sender) continue;
      for (const auto& [key, established_height] : established_) {
        if (key.first != file_id || established_height > height) continue;
        const std::uint32_t version = key.second;
        const auto& holders = file.distributed_holders[version];
        if (holders.count(recipient) != 0) continue;
        const std::uint32_t k = scheme_k(out, file_id, version);
        if (k != 0 && holders.size() >= k) continue;
        const bool better =
            best_file == nullptr || established_height > best_height ||
            (established_height == best_height && file_id < best_file_id);
        if (better) {
          best_file = &file;
          best_file_id = file_id;
          best_version = version;
          best_height = established_height;
        }
      }
    }
    if (best_file != nullptr) {
      out.files.at(best_file_id)
          .distributed_holders[best_version]
          .insert(recipient);
      emit(out, AuditEvent{EventKind::ShareDistributed, recipient,
                           best_file_id, best_version, height,
                           message.meta.txids, ""});
      return;
    }
    ++out.diagnostics.unclassified_sealed;
  }
};

std::vector<std::vector<Block>> branch_paths(const chain::Ledger& ledger,
                                             bool include_retained) {
  std::vector<std::vector<Block>> paths;
  paths.push_back(ledger.main_branch());
  if (!include_retained) return paths;

  // Index every known block by digest so a retained branch can be walked back
  // through whatever prefix it forked from.
  std::map<std::string, const Block*> by_digest;
  for (const auto& block : ledger.main_branch()) {
    by_digest.emplace(block.digest, &block);
  }
  for (const auto& branch : ledger.retained_branches()) {
    for (const auto& block : branch.blocks) {
      by_digest.emplace(block.digest, &block);
    }
  }

  for (const auto& branch : ledger.retained_branches()) {
    if (branch.blocks.empty()) continue;
    std::vector<Block> path(branch.blocks.begin(), branch.blocks.end());
    std::string want = branch.blocks.front().prev;
    while (want != std::string(chain::kTxidHexLen, '0')) {
      auto it = by_digest.find(want);
      if (it == by_digest.end()) break;  // orphaned prefix; audit what exists
      path.insert(path.begin(), *it->second);
      want = it->second->prev;
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

std::string event_identity(const AuditEvent& e) {
  return event_kind_name(e.kind) + "|" + e.actor + "|" + e.file_id + "|" +
         std::to_string(e.version) + "|" + e.message_reference + "|" +
         std::to_string(e.block_height) + "|" +
         (e.txids.empty() ? "" : e.txids.front());
}

}  // namespace

ReplayResult replay(const chain::Ledger& ledger,
                    const crypto::Directory& directory,
                    bool include_retained) {
  const auto paths = branch_paths(ledger, include_retained);

  ReplayResult merged;
  std::set<std::string> seen;
  bool first_path = true;
  for (const auto& path : paths) {
    ReplayResult local;
    PathReplay(directory).run(path, local);

    if (first_path) {
      merged = std::move(local);
      for (const auto& event : merged.events) {
        seen.insert(event_identity(event));
      }
      first_path = false;
      continue;
    }
    for (auto& event : local.events) {
      if (seen.insert(event_identity(event)).second) {
        merged.events.push_back(std::move(event));
      }
    }
    for (auto& [file_id, file] : local.files) {
      merged.files.emplace(file_id, std::move(file));  // main path wins
    }
    for (auto& [reference, request] : local.requests) {
      auto existing = merged.requests.find(reference);
      if (existing == merged.requests.end()) {
        merged.requests.emplace(reference, std::move(request));
        continue;
      }
      for (const auto& responder : request.responders) {
        existing->second.responders.insert(responder);
        auto height = request.response_heights.find(responder);
        if (height != request.response_heights.end()) {
          existing->second.response_heights.emplace(responder, height->second);
        }
      }
      existing->second.proven = existing->second.proven || request.proven;
    }
    for (auto& [reference, envelopes] : local.response_envelopes) {
      auto& bucket = merged.response_envelopes[reference];
      for (auto& envelope : envelopes) {
        if (std::find(bucket.begin(), bucket.end(), envelope) == bucket.end()) {
          bucket.push_back(std::move(envelope));
        }
      }
    }
    merged.diagnostics.forged_messages += local.diagnostics.forged_messages;
    merged.diagnostics.unclassified_sealed +=
        local.diagnostics.unclassified_sealed;
    merged.diagnostics.incomplete_chains +=
        local.diagnostics.incomplete_chains;
  }

  std::stable_sort(
      merged.events.begin(), merged.events.end(),
      [](const AuditEvent& a, const AuditEvent& b) {
        return a.block_height < b.block_height;
      });
  return merged;
}

std::map<std::string, std::uint64_t> first_access_report(
    std::span<const AuditEvent> events, const std::string& file_id) {
  std::map<std::string, std::uint64_t> report;
  for (const auto& event : events) {
    if (event.kind != EventKind::AccessProven || event.file_id != file_id) {
      continue;
    }
    auto it = report.find(event.actor);
    if (it == report.end() || event.block_height < it->second) {
      report[event.actor] = event.block_height;
    }
  }
  return report;
}

std::vector<OffenseRecord> identify_malicious(
    const ReplayResult& replayed, const DisclosureSet& disclosures,
    const std::map<std::string, std::uint64_t>& rejected_uploads,
    std::uint64_t round_budget) {
  std::vector<OffenseRecord> offenses;

  // wrong shares: disclosed values against the broadcast digests
  for (const auto& [reference, shares] : disclosures) {
    auto request = replayed.requests.find(reference);
    if (request == replayed.requests.end()) continue;
    auto file = replayed.files.find(request->second.file_id);
    if (file == replayed.files.end()) continue;
    auto list = file->second.digest_lists.find(request->second.version);
    if (list == file->second.digest_lists.end()) continue;
    for (const auto& disclosed : shares) {
      auto expected = list->second.digests.find(disclosed.share_index);
      const bool ok = expected != list->second.digests.end() &&
                      crypto::hash(disclosed.value) == expected->second;
      if (!ok) {
        offenses.push_back(OffenseRecord{disclosed.responder,
                                         Offense::WrongShare,
                                         request->second.file_id, reference});
      }
    }
  }

  // silent holders: assigned but no response within the budget
  for (const auto& [reference, request] : replayed.requests) {
    auto file = replayed.files.find(request.file_id);
    if (file == replayed.files.end()) continue;
    std::set<std::string> holders;
    if (auto lookup = file->second.lookups.find(request.version);
        lookup != file->second.lookups.end()) {
      for (const auto& [index, node] : lookup->second) holders.insert(node);
    } else if (auto dist = file->second.distributed_holders.find(request.version);
               dist != file->second.distributed_holders.end()) {
      holders = dist->second;
    }
    for (const auto& holder : holders) {
      auto responded = request.response_heights.find(holder);
      const bool in_time = responded != request.response_heights.end() &&
                           responded->second <=
                               request.block_height + round_budget;
      if (!in_time) {
        offenses.push_back(OffenseRecord{holder, Offense::SilentHolder,
                                         request.file_id, reference});
      }
    }
  }

  for (const auto& event : replayed.events) {
    if (event.kind == EventKind::ForgedUpdateRejected) {
      offenses.push_back(OffenseRecord{event.actor, Offense::ForgedUpdate,
                                       event.file_id, ""});
    }
  }

  for (const auto& [node, count] : rejected_uploads) {
    if (count > 0) {
      offenses.push_back(
          OffenseRecord{node, Offense::JunkUpload, "", "", count});
    }
  }

  std::sort(offenses.begin(), offenses.end(),
            [](const OffenseRecord& a, const OffenseRecord& b) {
              return std::tie(a.node_id, a.offense, a.file_id,
                              a.message_reference) <
                     std::tie(b.node_id, b.offense, b.file_id,
                              b.message_reference);
            });
  return offenses;
}

nlohmann::json DenialClaim::to_json() const {
  nlohmann::json j{{"format_version", 1},
                   {"claimant", claimant},
                   {"file_id", file_id},
                   {"message_reference", message_reference}};
  nlohmann::json evidence = nlohmann::json::object();
  if (private_decryption_key) {
    evidence["private_decryption_key_b64"] = to_base64(*private_decryption_key);
  }
  if (!disclosed_shares.empty()) {
    nlohmann::json shares = nlohmann::json::array();
    for (const auto& share : disclosed_shares) {
      shares.push_back(nlohmann::json{{"share_index", share.index},
                                      {"version", share.version},
                                      {"value_b64", to_base64(share.value)}});
    }
    evidence["shares"] = shares;
  }
  j["evidence"] = evidence;
  return j;
}

DenialClaim DenialClaim::from_json(const nlohmann::json& j) {
  try {
    DenialClaim claim;
    claim.claimant = j.at("claimant").get<std::string>();
    claim.file_id = j.at("file_id").get<std::string>();
    claim.message_reference = j.at("message_reference").get<std::string>();
    const auto& evidence = j.at("evidence");
    if (evidence.contains("private_decryption_key_b64")) {
      claim.private_decryption_key = from_base64(
          evidence.at("private_decryption_key_b64").get<std::string>());
    }
    if (evidence.contains("shares")) {
      for (const auto& s : evidence.at("shares")) {
        sharing::SecretShare share;
        share.file_id = claim.file_id;
        share.index = s.at("share_index").get<std::uint32_t>();
        share.version = s.at("version").get<std::uint32_t>();
        share.value = from_base64(s.at("value_b64").get<std::string>());
        claim.disclosed_shares.push_back(std::move(share));
      }
    }
    return claim;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("denial claim: ") + e.what());
  }
}

DenialResult verify_denial(const DenialClaim& claim,
                           const chain::Ledger& ledger,
                           const crypto::Directory& directory,
                           const CiphertextProvider& ciphertext_for) {
  const ReplayResult replayed = replay(ledger, directory, true);
  DenialResult result;
  auto note = [&result](std::string line) {
    result.transcript.push_back(std::move(line));
  };

  auto request_it = replayed.requests.find(claim.message_reference);
  if (request_it == replayed.requests.end() ||
      request_it->second.requester != claim.claimant) {
    throw EvidenceIncomplete("no share request with reference " +
                             claim.message_reference + " by " + claim.claimant);
  }
  const RequestRecord& request = request_it->second;
  if (!request.proven) {
    throw EvidenceIncomplete("no proven access for reference " +
                             claim.message_reference);
  }
  auto file_it = replayed.files.find(request.file_id);
  if (file_it == replayed.files.end()) {
    throw EvidenceIncomplete("no announcement for file " + request.file_id);
  }
  const HarvestedFile& file = file_it->second;
  note("request " + claim.message_reference + " by " + claim.claimant +
       " for file " + request.file_id + " v" +
       std::to_string(request.version) + " at height " +
       std::to_string(request.block_height));

  auto scheme_it = file.schemes.find(request.version);
  if (scheme_it == file.schemes.end()) {
    throw EvidenceIncomplete("no scheme for the requested version");
  }
  sharing::ShareScheme scheme;
  scheme.k = scheme_it->second.k;
  scheme.n = scheme_it->second.n;
  scheme.version = request.version;

  const auto ciphertext_bytes = ciphertext_for(request.file_id);
  if (!ciphertext_bytes) {
    throw EvidenceIncomplete("ciphertext of file " + request.file_id +
                             " is unavailable");
  }
  const crypto::Digest expected_digest =
      crypto::Digest::from_hex(file.announcement.plaintext_digest);
  const crypto::Ciphertext ciphertext =
      crypto::Ciphertext::deserialize(*ciphertext_bytes);
  auto validator = [&](const crypto::SymmetricKey& key) {
    try {
      return crypto::hash(crypto::decrypt(key, ciphertext)) == expected_digest;
    } catch (const AuthenticationFailure&) {
      return false;
    }
  };

  // Gather the shares: open the sealed responses with the disclosed private
  // key, or take the disclosed share values at face value.
  std::vector<sharing::SecretShare> shares;
  if (claim.private_decryption_key) {
    const Bytes derived =
        crypto::derive_encryption_public(*claim.private_decryption_key);
    if (derived != directory.at(claim.claimant).enc_pk) {
      throw EvidenceIncomplete(
          "disclosed private key does not match the known public key of " +
          claim.claimant);
    }
    note("private key matches the directory entry of " + claim.claimant);

    crypto::NodeIdentity evidence_identity;
    evidence_identity.id = claim.claimant;
    evidence_identity.encryption.secret_key = *claim.private_decryption_key;
    evidence_identity.encryption.public_key = derived;

    auto envelopes = replayed.response_envelopes.find(claim.message_reference);
    const std::size_t total =
        envelopes == replayed.response_envelopes.end()
            ? 0
            : envelopes->second.size();
    note(std::to_string(total) + " sealed responses on the ledger");
    std::set<std::uint32_t> seen_indices;
    if (envelopes != replayed.response_envelopes.end()) {
      for (const auto& envelope : envelopes->second) {
        try {
          auto command = msg::open(envelope, evidence_identity, directory);
          if (!command) {
            note("response from " + envelope.sender_id + ": not addressed");
            continue;
          }
          const auto* response = std::get_if<msg::ShareResponse>(&*command);
          if (response == nullptr ||
              response->message_reference != claim.message_reference) {
            note("response from " + envelope.sender_id +
                 ": not a share response for this reference");
            continue;
          }
          if (!seen_indices.insert(response->share_index).second) continue;
          sharing::SecretShare share;
          share.file_id = request.file_id;
          share.index = response->share_index;
          share.version = response->version;
          share.value = response->share_value;
          shares.push_back(std::move(share));
          note("opened share " + std::to_string(response->share_index) +
               " from " + envelope.sender_id);
        } catch (const Error& e) {
          // undecodable under the disclosed key: exactly what the claimant
          // asserts; it cannot contribute to reconstruction
          note("response from " + envelope.sender_id +
               " does not decode: " + e.what());
        }
      }
    }
  } else if (!claim.disclosed_shares.empty()) {
    shares = claim.disclosed_shares;
    note(std::to_string(shares.size()) + " disclosed share values");
    const std::size_t recorded = request.responders.size();
    if (shares.size() < recorded) {
      note("warning: ledger records " + std::to_string(recorded) +
           " responses but only " + std::to_string(shares.size()) +
           " values were disclosed");
    }
  } else {
    throw EvidenceIncomplete("claim carries no usable evidence");
  }

  if (shares.size() < scheme.n) {
    note("only " + std::to_string(shares.size()) + " of " +
         std::to_string(scheme.n) + " required shares decode");
    note("verdict: Upheld");
    result.verdict = DenialVerdict::Upheld;
    return result;
  }

  try {
    const auto reconstructed =
        sharing::reconstruct_with_faults(shares, scheme, validator);
    note("a validating key emerges from the replayed shares");
    if (!reconstructed.bad_indices.empty()) {
      std::string bad = "wrong share indices:";
      for (auto index : reconstructed.bad_indices) {
        bad += " " + std::to_string(index);
      }
      note(bad);
    }
    note("verdict: Refuted");
    result.verdict = DenialVerdict::Refuted;
  } catch (const ReconstructionImpossible&) {
    note("no subset of the replayed shares yields a key that decrypts the file");
    note("verdict: Upheld");
    result.verdict = DenialVerdict::Upheld;
  }
  return result;
}

CiphertextProvider ciphertext_from_store_dump(nlohmann::json dump) {
  return [dump = std::move(dump)](
             const std::string& file_id) -> std::optional<Bytes> {
    try {
      const auto& originals = dump.at("originals");
      if (originals.contains(file_id)) {
        return from_base64(
            originals.at(file_id).at("ciphertext").get<std::string>());
      }
      const auto& announced = dump.at("announced");
      if (!announced.contains(file_id)) return std::nullopt;
      const auto block_count = announced.at(file_id).get<std::uint32_t>();
      Bytes assembled;
      for (std::uint32_t index = 0; index < block_count; ++index) {
        const std::string key = file_id + ":" + std::to_string(index);
        bool found = false;
        for (const auto& [node_id, store] : dump.at("stores").items()) {
          const auto& blocks = store.at("blocks");
          if (blocks.contains(key)) {
            const Bytes data =
                from_base64(blocks.at(key).at("data").get<std::string>());
            assembled.insert(assembled.end(), data.begin(), data.end());
            found = true;
            break;
          }
        }
        if (!found) return std::nullopt;
      }
      return assembled;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
  };
}

nlohmann::json directory_to_json(const crypto::Directory& directory) {
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& [id, keys] : directory.nodes) {
    nodes[id] = nlohmann::json{{"sign_pk", to_base64(keys.sign_pk)},
                               {"enc_pk", to_base64(keys.enc_pk)}};
  }
  return nlohmann::json{{"format_version", 1}, {"nodes", nodes}};
}

crypto::Directory directory_from_json(const nlohmann::json& j) {
  try {
    crypto::Directory directory;
    for (const auto& [id, keys] : j.at("nodes").items()) {
      directory.nodes[id] =
          crypto::PublicKeys{from_base64(keys.at("sign_pk").get<std::string>()),
                             from_base64(keys.at("enc_pk").get<std::string>())};
    }
    return directory;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("directory: ") + e.what());
  }
}

}  // namespace pool::audit
