#include "pool/sim.hpp"

#include <algorithm>
#include <fstream>

#include "pool/errors.hpp"

namespace pool::sim {

using node::Acquisition;
using node::AcquisitionKind;
using node::FetchOutcome;
using node::PoolNode;

namespace {

std::string acquisition_kind_name(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::Publish: return "publish";
    case AcquisitionKind::Fetch: return "fetch";
    case AcquisitionKind::Collusion: return "collusion";
  }
  throw Error("unreachable acquisition kind");
}

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

}  // namespace

Scenario Scenario::from_json(const json& j) {
  Scenario s;
  try {
    if (j.value("format_version", 1) != 1) {
      config_error("/format_version", "unsupported version");
    }
    s.name = j.value("name", "scenario");
    s.seed = j.value("seed", 0ull);
    s.block_size = j.value("block_size", std::size_t{1024});
    s.replication = j.value("replication", std::size_t{2});
    s.round_budget = j.value("round_budget", 3ull);
    s.segments_per_transaction =
        j.value("segments_per_transaction", std::size_t{1});
    s.rounds = j.value("rounds", 0ull);

    if (!j.contains("nodes") || !j.at("nodes").is_array() ||
        j.at("nodes").empty()) {
      config_error("/nodes", "at least one node is required");
    }
    std::set<std::string> ids;
    std::size_t index = 0;
    for (const auto& nj : j.at("nodes")) {
      const std::string path = "/nodes/" + std::to_string(index++);
      if (!nj.contains("id")) config_error(path + "/id", "missing");
      ScenarioNode sn;
      sn.id = nj.at("id").get<std::string>();
      sn.behavior = store::behavior_from_name(nj.value("behavior", "honest"));
      if (!ids.insert(sn.id).second) {
        config_error(path + "/id", "duplicate node id " + sn.id);
      }
      s.nodes.push_back(std::move(sn));
    }

    static const std::set<std::string> kVerbs{
        "publish", "fetch",    "reissue",     "revoke",
        "revert",  "add_node", "remove_node", "collude"};
    std::uint64_t previous_round = 0;
    index = 0;
    if (j.contains("actions")) {
      for (const auto& aj : j.at("actions")) {
        const std::string path = "/actions/" + std::to_string(index++);
        ScenarioAction a;
        a.round = aj.value("round", 0ull);
        if (a.round < previous_round) {
          config_error(path + "/round", "rounds must be non-decreasing");
        }
        previous_round = a.round;
        a.verb = aj.value("action", "");
        if (kVerbs.count(a.verb) == 0) {
          config_error(path + "/action", "unknown action \"" + a.verb + "\"");
        }
        a.actor = aj.value("actor", "");
        a.params = aj.value("params", json::object());
        if (a.verb == "add_node") {
          const std::string added = a.params.value("id", "");
          if (added.empty()) config_error(path + "/params/id", "missing");
          if (!ids.insert(added).second) {
            config_error(path + "/params/id", "duplicate node id " + added);
          }
        } else if (a.verb != "revert" && ids.count(a.actor) == 0) {
          config_error(path + "/actor", "unknown node \"" + a.actor + "\"");
        }
        s.actions.push_back(std::move(a));
      }
    }
    if (j.contains("assertions")) {
      for (const auto& assertion : j.at("assertions")) {
        s.assertions.push_back(assertion);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  return s;
}

Scenario Scenario::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  Scenario s = from_json(j);
  if (s.name == "scenario") s.name = path.stem().string();
  return s;
}

Simulator::Simulator(Scenario scenario)
    : scenario_(std::move(scenario)),
      rng_(scenario_.seed),
      ledger_(chain::SegmentationConfig{scenario_.segments_per_transaction}),
      dht_(scenario_.replication, scenario_.block_size) {
  for (const auto& sn : scenario_.nodes) {
    auto identity = crypto::NodeIdentity::generate(sn.id, rng_);
    directory_.add(identity);
    dht_.add_node(sn.id, sn.behavior);
    members_[sn.id] =
        Member{std::make_unique<PoolNode>(std::move(identity), sn.behavior),
               true};
  }
}

Simulator::~Simulator() = default;

std::vector<std::string> Simulator::active_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, member] : members_) {
    if (member.active) ids.push_back(id);
  }
  return ids;  // std::map iteration is already sorted
}

node::Services Simulator::services() {
  return node::Services{
      ledger_,
      dht_,
      directory_,
      rng_,
      round_,
      active_ids(),
      counters_,
      [this](const Acquisition& a) { acquisitions_.push_back(a); }};
}

PoolNode& Simulator::node_ref(const std::string& id) {
  auto it = members_.find(id);
  if (it == members_.end()) throw Error("unknown node " + id);
  return *it->second.node;
}

std::string Simulator::resolve_file(const std::string& file_name,
                                    const std::string& where) const {
  auto it = files_by_name_.find(file_name);
  if (it == files_by_name_.end()) {
    config_error(where, "no published file named \"" + file_name + "\"");
  }
  return it->second;
}

void Simulator::deliver() {
  const auto result = chain::reassemble(ledger_.main_branch());
  for (const auto& message : result.messages) {
    if (!delivered_.insert(message.terminal_txid).second) continue;
    msg::MessageEnvelope envelope;
    try {
      envelope = msg::parse_xml(to_string(message.bytes));
    } catch (const ParseError&) {
      ++counters_.forged_dropped;
      continue;
    }
    delivery_history_.push_back(envelope);
    auto svc = services();
    for (const auto& id : svc.active_nodes) {
      members_.at(id).node->handle_incoming(svc, envelope);
    }
  }
}

void Simulator::execute(const ScenarioAction& action) {
  const std::string where = "action " + action.verb + "@" +
                            std::to_string(action.round) + " by " +
                            action.actor;
  auto svc = services();

  if (action.verb == "publish") {
    const std::string file_name = action.params.value("file_name", "");
    if (file_name.empty()) config_error(where, "file_name is required");
    Bytes content;
    if (action.params.contains("content_b64")) {
      content = from_base64(action.params.at("content_b64").get<std::string>());
    } else {
      const auto size = action.params.value("content_size", std::size_t{4100});
      content = rng_.bytes(size);
    }
    const auto manifest = node_ref(action.actor)
                              .publish(svc, file_name, std::move(content),
                                       action.params.value("metadata",
                                                           json::object()));
    files_by_name_[file_name] = manifest.file_id;
    return;
  }

  if (action.verb == "fetch") {
    const std::string file_id =
        resolve_file(action.params.value("file_name", ""), where);
    node_ref(action.actor).begin_fetch(svc, file_id, scenario_.round_budget);
    return;
  }

  if (action.verb == "reissue") {
    const std::string file_id =
        resolve_file(action.params.value("file_name", ""), where);
    node_ref(action.actor).reissue_shares(svc, file_id);
    return;
  }

  if (action.verb == "revoke") {
    const std::string file_id =
        resolve_file(action.params.value("file_name", ""), where);
    node_ref(action.actor).revoke(svc, file_id);
    return;
  }

  if (action.verb == "revert") {
    const auto height = action.params.value("height", 0ull);
    ledger_.revert_to(height);
    if (ledger_out_) chain::write_revert_line(*ledger_out_, height);
    return;
  }

  if (action.verb == "add_node") {
    const std::string id = action.params.at("id").get<std::string>();
    const auto behavior =
        store::behavior_from_name(action.params.value("behavior", "honest"));
    auto identity = crypto::NodeIdentity::generate(id, rng_);
    directory_.add(identity);
    dht_.add_node(id, behavior);
    members_[id] =
        Member{std::make_unique<PoolNode>(std::move(identity), behavior), true};
    // blockchain catch-up: the newcomer reads the whole message history
    auto catch_up = services();
    for (const auto& envelope : delivery_history_) {
      members_.at(id).node->handle_incoming(catch_up, envelope);
    }
    return;
  }

  if (action.verb == "remove_node") {
    const std::string id = action.params.value("id", action.actor);
    members_.at(id).active = false;
    dht_.remove_node(id);
    return;
  }

  if (action.verb == "collude") {
    do_collude(action);
    return;
  }
  config_error(where, "unhandled action");
}

void Simulator::do_collude(const ScenarioAction& action) {
  const std::string where = "collude action";
  const std::string file_id =
      resolve_file(action.params.value("file_name", ""), where);
  PoolNode& actor = node_ref(action.actor);
  if (actor.has_plaintext(file_id)) return;

  const auto view = actor.version_view(file_id);
  if (!view) config_error(where, "actor knows no version for the file");

  // Shares pooled off the record; nothing of this touches the ledger.
  std::vector<sharing::SecretShare> shares;
  std::set<std::uint32_t> seen;
  auto take = [&](const std::string& member_id) {
    auto share = node_ref(member_id).held_share(file_id, view->version);
    if (share && seen.insert(share->index).second) shares.push_back(*share);
  };
  take(action.actor);
  for (const auto& accomplice :
       action.params.value("accomplices", std::vector<std::string>{})) {
    take(accomplice);
  }
  if (shares.size() < view->n) {
    config_error(where, "colluders hold " + std::to_string(shares.size()) +
                            " shares, need " + std::to_string(view->n));
  }

  sharing::ShareScheme scheme;
  scheme.k = view->k;
  scheme.n = view->n;
  scheme.version = view->version;
  const auto secret = sharing::reconstruct(shares, scheme);

  const auto ciphertext = dht_.original_ciphertext(file_id);
  if (!ciphertext) config_error(where, "no ciphertext available off-band");
  const Bytes plaintext = crypto::decrypt(
      secret.key, crypto::Ciphertext::deserialize(*ciphertext));

  actor.inject_plaintext(file_id, plaintext);
  acquisitions_.push_back(Acquisition{action.actor, file_id, round_,
                                      AcquisitionKind::Collusion, ""});
}

std::filesystem::path Simulator::directory_sidecar(
    const std::filesystem::path& ledger_path) {
  return ledger_path.string() + ".directory.json";
}

std::filesystem::path Simulator::blocks_sidecar(
    const std::filesystem::path& ledger_path) {
  return ledger_path.string() + ".blocks.json";
}

audit::CiphertextProvider Simulator::ciphertext_provider() const {
  return [this](const std::string& file_id) {
    return dht_.original_ciphertext(file_id);
  };
}

audit::DenialClaim Simulator::make_denial_claim(
    const std::string& node_id, const std::string& reference) const {
  auto member = members_.find(node_id);
  if (member == members_.end()) throw Error("unknown node " + node_id);
  audit::DenialClaim claim;
  claim.claimant = node_id;
  claim.message_reference = reference;
  for (const auto& outcome : member->second.node->fetch_outcomes()) {
    if (outcome.message_reference == reference) {
      claim.file_id = outcome.file_id;
      break;
    }
  }
  claim.private_decryption_key =
      member->second.node->identity().encryption.secret_key;
  return claim;
}

RunReport Simulator::run(const std::filesystem::path& ledger_path) {
  const std::uint64_t rounds = [this] {
    if (scenario_.rounds != 0) return scenario_.rounds;
    std::uint64_t last_action = 0;
    for (const auto& action : scenario_.actions) {
      last_action = std::max(last_action, action.round);
    }
    return last_action + scenario_.round_budget + 3;
  }();

  ledger_out_.emplace(ledger_path, std::ios::trunc);
  if (!*ledger_out_) {
    throw ConfigError("cannot write ledger log " + ledger_path.string());
  }

  std::size_t next_action = 0;
  for (round_ = 0; round_ < rounds; ++round_) {
    deliver();

    while (next_action < scenario_.actions.size() &&
           scenario_.actions[next_action].round <= round_) {
      execute(scenario_.actions[next_action]);
      ++next_action;
    }

    {
      auto svc = services();
      for (const auto& id : svc.active_nodes) {
        members_.at(id).node->finish_round(svc);
      }
    }

    // junk uploaders push an unannounced block every round
    for (const auto& id : active_ids()) {
      if (members_.at(id).node->behavior() == store::Behavior::JunkUploader) {
        const store::BlockKey key{to_hex(rng_.bytes(8)), 0};
        const Bytes junk = rng_.bytes(32);
        dht_.put_block(id, key, junk, crypto::hash(junk));
      }
    }

    const chain::Block& block = ledger_.advance_round();
    chain::write_block_line(*ledger_out_, block);
  }
  ledger_out_->flush();
  ledger_out_.reset();

  // the persisted log must reproduce the ledger exactly
  {
    std::ifstream in(ledger_path);
    const chain::Ledger reloaded = chain::load_ledger(
        in, chain::SegmentationConfig{scenario_.segments_per_transaction});
    if (!(reloaded == ledger_)) {
      throw Error("persisted ledger log does not reproduce the ledger");
    }
  }

  replayed_ = audit::replay(ledger_, directory_, false);
  replayed_full_ = audit::replay(ledger_, directory_, true);

  {
    std::ofstream dir_out(directory_sidecar(ledger_path), std::ios::trunc);
    dir_out << audit::directory_to_json(directory_).dump(2) << '\n';
    json blocks_dump = dht_.dump();
    blocks_dump["format_version"] = 1;
    json rejected = json::object();
    for (const auto& [id, count] : dht_.rejected_uploads()) {
      rejected[id] = count;
    }
    blocks_dump["rejected_uploads"] = rejected;
    std::ofstream blocks_out(blocks_sidecar(ledger_path), std::ios::trunc);
    blocks_out << blocks_dump.dump(2) << '\n';
  }

  RunReport report;
  report.body = build_report();
  report.body["assertions"] = evaluate_assertions(report.body);
  bool all_passed = true;
  for (const auto& a : report.body["assertions"]) {
    all_passed = all_passed && a.at("passed").get<bool>();
  }
  report.all_assertions_passed = all_passed;
  report.body["all_assertions_passed"] = all_passed;
  return report;
}

json Simulator::build_report() {
  json report;
  report["format_version"] = 1;
  report["scenario"] = scenario_.name;
  report["seed"] = scenario_.seed;
  report["parameters"] = json{
      {"block_size", scenario_.block_size},
      {"replication", scenario_.replication},
      {"round_budget", scenario_.round_budget},
      {"segments_per_transaction", scenario_.segments_per_transaction}};

  std::uint64_t mined = ledger_.main_branch().size();
  for (const auto& branch : ledger_.retained_branches()) {
    mined += branch.blocks.size();
  }
  report["counters"] = json{{"messages", counters_.messages},
                            {"transactions", counters_.transactions},
                            {"blocks", mined},
                            {"rejected_blocks", dht_.total_rejected()},
                            {"source_fallbacks", dht_.source_fallbacks()}};

  // conservation: every submitted envelope reassembles exactly once over the
  // union of the main branch and the retained ones
  {
    std::vector<chain::Block> all_blocks = ledger_.main_branch();
    for (const auto& branch : ledger_.retained_branches()) {
      all_blocks.insert(all_blocks.end(), branch.blocks.begin(),
                        branch.blocks.end());
    }
    const auto all = chain::reassemble(all_blocks);
    report["reassembled_messages"] = all.messages.size();
    report["incomplete_chains"] = all.incomplete.size();
  }

  json files = json::object();
  for (const auto& [name, file_id] : files_by_name_) {
    const auto it = replayed_.files.find(file_id);
    json entry{{"file_id", file_id}};
    if (it != replayed_.files.end()) {
      entry["source_node"] = it->second.announcement.source_node;
      entry["block_count"] = it->second.announcement.block_count;
    }
    files[name] = entry;
  }
  report["files"] = files;

  json events = json::array();
  for (const auto& event : replayed_.events) events.push_back(event.to_json());
  report["events"] = events;

  json first_access = json::object();
  for (const auto& [name, file_id] : files_by_name_) {
    json per_node = json::object();
    for (const auto& [node_id, height] :
         audit::first_access_report(replayed_.events, file_id)) {
      per_node[node_id] = height;
    }
    first_access[file_id] = per_node;
  }
  report["first_access"] = first_access;

  // Failed fetches that the chain nevertheless "proves" go through the
  // denial procedure; upheld denials drop out of the effective access log.
  std::set<std::string> upheld_references;
  denials_ = json::array();
  for (const auto& [id, member] : members_) {
    for (const auto& outcome : member.node->fetch_outcomes()) {
      if (outcome.status != FetchOutcome::Status::ReconstructionImpossible ||
          outcome.message_reference.empty()) {
        continue;
      }
      auto request = replayed_.requests.find(outcome.message_reference);
      if (request == replayed_.requests.end() || !request->second.proven) {
        continue;
      }
      const auto claim = make_denial_claim(id, outcome.message_reference);
      const auto result = audit::verify_denial(claim, ledger_, directory_,
                                               ciphertext_provider());
      const bool upheld = result.verdict == audit::DenialVerdict::Upheld;
      if (upheld) upheld_references.insert(outcome.message_reference);
      denials_.push_back(json{
          {"claimant", id},
          {"file_id", outcome.file_id},
          {"message_reference", outcome.message_reference},
          {"verdict", upheld ? "Upheld" : "Refuted"}});
    }
  }
  report["denials"] = denials_;

  effective_access_.clear();
  json effective = json::array();
  for (const auto& event : replayed_.events) {
    if (event.kind != audit::EventKind::AccessProven) continue;
    if (upheld_references.count(event.message_reference) != 0) continue;
    effective_access_.emplace_back(event.actor, event.file_id);
    effective.push_back(json{{"node_id", event.actor},
                             {"file_id", event.file_id},
                             {"version", event.version},
                             {"message_reference", event.message_reference},
                             {"block_height", event.block_height}});
  }
  report["effective_access"] = effective;

  json effective_full = json::array();
  std::set<std::string> seen_full;
  for (const auto& event : replayed_full_.events) {
    if (event.kind != audit::EventKind::AccessProven) continue;
    if (upheld_references.count(event.message_reference) != 0) continue;
    if (!seen_full.insert(event.actor + "|" + event.file_id + "|" +
                          event.message_reference).second) {
      continue;
    }
    effective_full.push_back(json{{"node_id", event.actor},
                                  {"file_id", event.file_id},
                                  {"version", event.version},
                                  {"message_reference", event.message_reference},
                                  {"block_height", event.block_height}});
  }
  report["effective_access_full"] = effective_full;

  audit::DisclosureSet disclosures;
  for (const auto& [id, member] : members_) {
    for (const auto& outcome : member.node->fetch_outcomes()) {
      if (outcome.message_reference.empty()) continue;
      auto& bucket = disclosures[outcome.message_reference];
      for (const auto& [index, value, responder] : outcome.received_shares) {
        bucket.push_back(audit::DisclosedShare{index, value, responder});
      }
    }
  }
  const auto offenses =
      audit::identify_malicious(replayed_, disclosures, dht_.rejected_uploads(),
                                scenario_.round_budget);
  json offenses_json = json::array();
  for (const auto& offense : offenses) offenses_json.push_back(offense.to_json());
  report["offenses"] = offenses_json;

  json fetches = json::array();
  for (const auto& [id, member] : members_) {
    for (const auto& outcome : member.node->fetch_outcomes()) {
      json f{{"actor", id},
             {"file_id", outcome.file_id},
             {"status", node::fetch_status_name(outcome.status)},
             {"from_cache", outcome.from_cache},
             {"version", outcome.version},
             {"responses_received", outcome.responses_received},
             {"bad_share_indices", outcome.bad_share_indices},
             {"round", outcome.completed_round}};
      if (!outcome.message_reference.empty()) {
        f["message_reference"] = outcome.message_reference;
      }
      fetches.push_back(std::move(f));
    }
  }
  report["fetches"] = fetches;

  json acquisitions = json::array();
  for (const auto& a : acquisitions_) {
    json entry{{"node_id", a.node_id},
               {"file_id", a.file_id},
               {"round", a.round},
               {"kind", acquisition_kind_name(a.kind)}};
    if (!a.message_reference.empty()) {
      entry["message_reference"] = a.message_reference;
    }
    acquisitions.push_back(std::move(entry));
  }
  report["acquisitions"] = acquisitions;

  json unresponsive = json::object();
  for (const auto& [id, count] : dht_.unresponsive_replicas()) {
    unresponsive[id] = count;
  }
  json corrupt = json::object();
  for (const auto& [id, count] : dht_.corrupt_providers()) {
    corrupt[id] = count;
  }
  json rejected = json::object();
  for (const auto& [id, count] : dht_.rejected_uploads()) rejected[id] = count;
  report["block_diagnostics"] =
      json{{"unresponsive_replicas", unresponsive},
           {"corrupt_providers", corrupt},
           {"rejected_uploads", rejected},
           {"unannounced_blocks_stored", dht_.audit_stores().size()}};

  report["audit_diagnostics"] =
      json{{"forged_messages", replayed_.diagnostics.forged_messages},
           {"unclassified_sealed", replayed_.diagnostics.unclassified_sealed},
           {"incomplete_chains", replayed_.diagnostics.incomplete_chains},
           {"dropped_by_nodes", counters_.forged_dropped}};
  return report;
}

json Simulator::evaluate_assertions(const json& report_core) {
  json results = json::array();

  auto ground_truth_fetches = [this] {
    std::set<std::pair<std::string, std::string>> set;
    for (const auto& a : acquisitions_) {
      if (a.kind == AcquisitionKind::Fetch) set.insert({a.node_id, a.file_id});
    }
    return set;
  };

  auto effective_set = [this] {
    return std::set<std::pair<std::string, std::string>>(
        effective_access_.begin(), effective_access_.end());
  };

  auto latest_outcome =
      [this](const std::string& actor,
             const std::string& file_id) -> const FetchOutcome* {
    const FetchOutcome* found = nullptr;
    for (const auto& outcome : node_ref(actor).fetch_outcomes()) {
      if (outcome.file_id == file_id) found = &outcome;
    }
    return found;
  };

  for (const auto& spec : scenario_.assertions) {
    const std::string kind = spec.value("assert", "");
    json result{{"assert", kind}};
    bool passed = false;
    std::string detail;

    try {
      if (kind == "fetch_status") {
        const std::string actor = spec.at("actor").get<std::string>();
        const std::string file_id =
            resolve_file(spec.at("file_name").get<std::string>(), "assertion");
        const auto* outcome = latest_outcome(actor, file_id);
        if (outcome == nullptr) {
          detail = "no fetch outcome recorded";
        } else {
          const std::string expected = spec.at("expected").get<std::string>();
          passed = node::fetch_status_name(outcome->status) == expected;
          if (!passed) {
            detail = "got " + node::fetch_status_name(outcome->status);
          }
          if (passed && spec.contains("min_responses")) {
            const auto min = spec.at("min_responses").get<std::uint32_t>();
            passed = outcome->responses_received >= min;
            if (!passed) {
              detail = "only " + std::to_string(outcome->responses_received) +
                       " responses";
            }
          }
          if (passed && spec.contains("expected_responses")) {
            const auto want = spec.at("expected_responses").get<std::uint32_t>();
            passed = outcome->responses_received == want;
            if (!passed) {
              detail = std::to_string(outcome->responses_received) +
                       " responses, expected " + std::to_string(want);
            }
          }
          if (passed && spec.contains("expected_bad_indices")) {
            const auto want =
                spec.at("expected_bad_indices").get<std::vector<std::uint32_t>>();
            auto got = outcome->bad_share_indices;
            std::sort(got.begin(), got.end());
            passed = got == want;
            if (!passed) detail = "bad index set differs";
          }
          if (passed && spec.contains("from_cache")) {
            passed = outcome->from_cache == spec.at("from_cache").get<bool>();
            if (!passed) detail = "cache flag differs";
          }
        }
      } else if (kind == "access_proven" || kind == "access_proven_raw") {
        const std::string file_id =
            resolve_file(spec.at("file_name").get<std::string>(), "assertion");
        std::set<std::string> expected;
        for (const auto& n : spec.at("nodes")) {
          expected.insert(n.get<std::string>());
        }
        std::set<std::string> got;
        if (kind == "access_proven") {
          for (const auto& [node_id, fid] : effective_access_) {
            if (fid == file_id) got.insert(node_id);
          }
        } else {
          for (const auto& event : replayed_.events) {
            if (event.kind == audit::EventKind::AccessProven &&
                event.file_id == file_id) {
              got.insert(event.actor);
            }
          }
        }
        passed = got == expected;
        if (!passed) {
          detail = "proven set has " + std::to_string(got.size()) + " nodes";
        }
      } else if (kind == "offense_count") {
        const std::string offense = spec.at("offense").get<std::string>();
        const auto want = spec.at("count").get<std::uint64_t>();
        std::uint64_t got = 0;
        for (const auto& o : report_core.at("offenses")) {
          if (o.at("offense") != offense) continue;
          if (spec.contains("node") && o.at("node_id") != spec.at("node")) {
            continue;
          }
          ++got;
        }
        passed = got == want;
        if (!passed) detail = "got " + std::to_string(got);
      } else if (kind == "no_unannounced_blocks") {
        const auto offending = dht_.audit_stores();
        passed = offending.empty();
        if (!passed) detail = offending.front() + " and possibly more";
      } else if (kind == "rejected_blocks_min") {
        const auto min = spec.at("min").get<std::uint64_t>();
        passed = dht_.total_rejected() >= min;
        if (!passed) {
          detail = "only " + std::to_string(dht_.total_rejected());
        }
      } else if (kind == "ground_truth_matches_audit") {
        passed = effective_set() == ground_truth_fetches();
        if (!passed) detail = "effective access diverges from ground truth";
      } else if (kind == "retained_access_equals_ground_truth") {
        std::set<std::pair<std::string, std::string>> retained;
        for (const auto& event : replayed_full_.events) {
          if (event.kind == audit::EventKind::AccessProven) {
            retained.insert({event.actor, event.file_id});
          }
        }
        passed = retained == ground_truth_fetches();
        if (!passed) detail = "retained replay diverges from ground truth";
      } else if (kind == "main_access_count") {
        const std::string file_id =
            resolve_file(spec.at("file_name").get<std::string>(), "assertion");
        const auto want = spec.at("count").get<std::size_t>();
        std::size_t got = 0;
        for (const auto& event : replayed_.events) {
          if (event.kind == audit::EventKind::AccessProven &&
              event.file_id == file_id) {
            ++got;
          }
        }
        passed = got == want;
        if (!passed) detail = "got " + std::to_string(got);
      } else if (kind == "denial_verdict") {
        const std::string actor = spec.at("actor").get<std::string>();
        const std::string expected = spec.at("expected").get<std::string>();
        passed = false;
        for (const auto& denial : denials_) {
          if (denial.at("claimant") == actor) {
            passed = denial.at("verdict") == expected;
            break;
          }
        }
        if (!passed) detail = "no matching denial with that verdict";
      } else if (kind == "acquisition_count") {
        const std::string want_kind = spec.at("kind").get<std::string>();
        const auto want = spec.at("count").get<std::uint64_t>();
        std::uint64_t got = 0;
        for (const auto& a : acquisitions_) {
          if (acquisition_kind_name(a.kind) == want_kind) ++got;
        }
        passed = got == want;
        if (!passed) detail = "got " + std::to_string(got);
      } else if (kind == "source_fallbacks_min") {
        const auto min = spec.at("min").get<std::uint64_t>();
        passed = dht_.source_fallbacks() >= min;
        if (!passed) {
          detail = "only " + std::to_string(dht_.source_fallbacks());
        }
      } else if (kind == "counter_equals") {
        const std::string name = spec.at("name").get<std::string>();
        const auto want = spec.at("value").get<std::uint64_t>();
        const auto got =
            report_core.at("counters").at(name).get<std::uint64_t>();
        passed = got == want;
        if (!passed) detail = "got " + std::to_string(got);
      } else {
        config_error("/assertions", "unknown assertion \"" + kind + "\"");
      }
    } catch (const json::exception& e) {
      config_error("/assertions", e.what());
    }

    result["passed"] = passed;
    if (!detail.empty()) result["detail"] = detail;
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace pool::sim
