#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pool/audit.hpp"
#include "pool/node.hpp"

namespace pool::sim {

using nlohmann::json;

struct ScenarioNode {
  std::string id;
  store::Behavior behavior = store::Behavior::Honest;
};

struct ScenarioAction {
  std::uint64_t round = 0;
  std::string actor;
  std::string verb;  // publish | fetch | reissue | revoke | revert |
                     // add_node | remove_node | collude
  json params = json::object();
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t block_size = 1024;
  std::size_t replication = 2;
  std::uint64_t round_budget = 3;
  std::size_t segments_per_transaction = 1;
  std::uint64_t rounds = 0;  // 0: derived from the last action
  std::vector<ScenarioNode> nodes;
  std::vector<ScenarioAction> actions;
  std::vector<json> assertions;

  static Scenario from_json(const json& j);  // throws ConfigError
  static Scenario from_file(const std::filesystem::path& path);
};

struct RunReport {
  json body;
  bool all_assertions_passed = true;

  std::string dump() const { return body.dump(2) + "\n"; }
};

// Deterministic round-driven execution of one scenario: deliver mined
// messages, run scripted actions, resolve open fetches, mine a block. The
// ledger log, the directory sidecar and the block-store dump land next to
// `ledger_path`; the report is returned.
class Simulator {
 public:
  explicit Simulator(Scenario scenario);
  ~Simulator();

  RunReport run(const std::filesystem::path& ledger_path);

  // post-run inspection (tests and claim construction)
  node::PoolNode& node_ref(const std::string& id);
  const chain::Ledger& ledger() const { return ledger_; }
  const crypto::Directory& directory() const { return directory_; }
  const store::DhtNetwork& dht() const { return dht_; }
  const std::vector<node::Acquisition>& acquisitions() const {
    return acquisitions_;
  }
  const audit::ReplayResult& replayed() const { return replayed_; }

  // Denial claim with the node's private decryption key as evidence.
  audit::DenialClaim make_denial_claim(const std::string& node_id,
                                       const std::string& reference) const;
  audit::CiphertextProvider ciphertext_provider() const;

  static std::filesystem::path directory_sidecar(
      const std::filesystem::path& ledger_path);
  static std::filesystem::path blocks_sidecar(
      const std::filesystem::path& ledger_path);

 private:
  struct Member {
    std::unique_ptr<node::PoolNode> node;
    bool active = true;
  };

  node::Services services();
  std::vector<std::string> active_ids() const;
  void deliver();
  void execute(const ScenarioAction& action);
  void do_collude(const ScenarioAction& action);
  std::string resolve_file(const std::string& file_name,
                           const std::string& where) const;
  json build_report();
  json evaluate_assertions(const json& report_core);

  Scenario scenario_;
  Rng rng_;
  chain::Ledger ledger_;
  store::DhtNetwork dht_;
  crypto::Directory directory_;
  std::map<std::string, Member> members_;
  std::map<std::string, std::string> files_by_name_;
  node::Counters counters_;
  std::vector<node::Acquisition> acquisitions_;
  std::set<std::string> delivered_;  // terminal txids already handed out
  std::vector<msg::MessageEnvelope> delivery_history_;  // for node catch-up
  std::uint64_t round_ = 0;
  std::optional<std::ofstream> ledger_out_;
  audit::ReplayResult replayed_;        // main branch
  audit::ReplayResult replayed_full_;   // with retained branches
  json denials_ = json::array();
  std::vector<std::pair<std::string, std::string>> effective_access_;
};

}  // namespace pool::sim
