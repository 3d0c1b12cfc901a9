#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pool/errors.hpp"
#include "pool/sim.hpp"

using namespace pool;
using namespace pool::sim;
using json = nlohmann::json;

namespace {

std::filesystem::path temp_dir() {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("pool_sim_test_" + std::to_string(++counter));
  std::filesystem::create_directories(dir);
  return dir;
}

Scenario base_scenario(std::size_t pool_size, std::uint64_t seed = 1) {
  Scenario s;
  s.name = "inline";
  s.seed = seed;
  s.rounds = 0;
  for (std::size_t i = 1; i <= pool_size; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "node-%02zu", i);
    s.nodes.push_back({id, store::Behavior::Honest});
  }
  return s;
}

ScenarioAction make_action(std::uint64_t round, std::string actor,
                           std::string verb, json params) {
  ScenarioAction a;
  a.round = round;
  a.actor = std::move(actor);
  a.verb = std::move(verb);
  a.params = std::move(params);
  return a;
}

}  // namespace

TEST_CASE("publish census: 1 announcement, k sealed hand-outs, 1 lookup, 1 digest list") {
  auto scenario = base_scenario(5);
  scenario.actions.push_back(make_action(
      1, "node-01", "publish",
      json{{"file_name", "a.bin"}, {"content_size", 4100}}));
  Simulator simulator(scenario);
  const auto dir = temp_dir();
  simulator.run(dir / "ledger.log");

  // 8 messages: announcement + 5 distributions + lookup + digests
  std::size_t broadcast = 0;
  std::size_t sealed = 0;
  const auto result = chain::reassemble(simulator.ledger().main_branch());
  for (const auto& message : result.messages) {
    const auto envelope = msg::parse_xml(to_string(message.bytes));
    (envelope.is_broadcast() ? broadcast : sealed) += 1;
  }
  CHECK(broadcast == 3);
  CHECK(sealed == 5);

  // block count for 4100 bytes of plaintext: AEAD adds nonce+tag (40 bytes)
  const auto& manifest = simulator.node_ref("node-03").manifests().begin()->second;
  CHECK(manifest.block_count == 5);
  CHECK(manifest.source_node == "node-01");

  // every node ends up holding exactly one share of version 1
  for (const auto& node_id : {"node-01", "node-02", "node-03", "node-04", "node-05"}) {
    const auto share = simulator.node_ref(node_id).held_share(manifest.file_id, 1);
    REQUIRE(share.has_value());
    CHECK(share->value.size() == 48);  // 32 key + 16 salt
  }
  // canonical assignment: i-th node holds share i
  CHECK(simulator.node_ref("node-02").held_share(manifest.file_id, 1)->index == 2);
  CHECK(simulator.node_ref("node-05").held_share(manifest.file_id, 1)->index == 5);
}

TEST_CASE("fetched plaintext matches the published content bit-exactly") {
  Rng content_rng(77);
  const Bytes content = content_rng.bytes(3000);

  auto scenario = base_scenario(5);
  scenario.actions.push_back(make_action(
      1, "node-01", "publish",
      json{{"file_name", "exact.bin"}, {"content_b64", to_base64(content)}}));
  scenario.actions.push_back(make_action(
      3, "node-04", "fetch", json{{"file_name", "exact.bin"}}));
  Simulator simulator(scenario);
  const auto report = simulator.run(temp_dir() / "ledger.log");

  const auto& outcomes = simulator.node_ref("node-04").fetch_outcomes();
  REQUIRE(outcomes.size() == 1);
  CHECK(outcomes[0].status == node::FetchOutcome::Status::Ok);
  CHECK(outcomes[0].plaintext == content);
  CHECK(crypto::hash(outcomes[0].plaintext) ==
        simulator.node_ref("node-04").manifests().begin()->second.plaintext_digest);
}

TEST_CASE("second fetch is served from cache with zero new ledger traffic") {
  auto scenario = base_scenario(4);
  scenario.actions.push_back(make_action(
      1, "node-01", "publish", json{{"file_name", "c.bin"}, {"content_size", 500}}));
  scenario.actions.push_back(make_action(3, "node-02", "fetch",
                                         json{{"file_name", "c.bin"}}));
  scenario.actions.push_back(make_action(7, "node-02", "fetch",
                                         json{{"file_name", "c.bin"}}));
  scenario.rounds = 11;
  Simulator simulator(scenario);
  const auto report = simulator.run(temp_dir() / "ledger.log");

  const auto& outcomes = simulator.node_ref("node-02").fetch_outcomes();
  REQUIRE(outcomes.size() == 2);
  CHECK(outcomes[0].status == node::FetchOutcome::Status::Ok);
  CHECK_FALSE(outcomes[0].from_cache);
  CHECK(outcomes[1].from_cache);

  // exactly one ShareRequest on the whole ledger
  std::size_t requests = 0;
  for (const auto& event : simulator.replayed().events) {
    if (event.kind == audit::EventKind::ShareRequested) ++requests;
  }
  CHECK(requests == 1);
  // and only one proven access despite two fetches
  CHECK(report.body.at("first_access").begin()->size() == 1);
}

TEST_CASE("reissue and revoke are source-only") {
  auto scenario = base_scenario(3);
  scenario.actions.push_back(make_action(
      1, "node-01", "publish", json{{"file_name", "f.bin"}, {"content_size", 100}}));
  Simulator simulator(scenario);
  simulator.run(temp_dir() / "ledger.log");

  const auto file_id =
      simulator.node_ref("node-02").manifests().begin()->first;

  // a non-source node cannot reissue or revoke
  chain::Ledger scratch_ledger;
  store::DhtNetwork scratch_dht(2, 1024);
  Rng scratch_rng(0);
  node::Counters counters;
  node::Services services{scratch_ledger, scratch_dht, simulator.directory(),
                          scratch_rng, 0, {"node-01", "node-02", "node-03"},
                          counters, [](const node::Acquisition&) {}};
  CHECK_THROWS_AS(simulator.node_ref("node-02").reissue_shares(services, file_id),
                  NotAuthorized);
  CHECK_THROWS_AS(simulator.node_ref("node-03").revoke(services, file_id),
                  NotAuthorized);
}

TEST_CASE("version bump: old shares keep their version, holders gain the new one") {
  auto scenario = base_scenario(4);
  scenario.actions.push_back(make_action(
      1, "node-01", "publish", json{{"file_name", "v.bin"}, {"content_size", 600}}));
  scenario.actions.push_back(make_action(3, "node-01", "reissue",
                                         json{{"file_name", "v.bin"}}));
  scenario.rounds = 7;
  Simulator simulator(scenario);
  simulator.run(temp_dir() / "ledger.log");

  const auto file_id = simulator.node_ref("node-02").manifests().begin()->first;
  auto& n2 = simulator.node_ref("node-02");
  CHECK(n2.held_share(file_id, 1).has_value());
  CHECK(n2.held_share(file_id, 2).has_value());
  CHECK(n2.newest_version(file_id) == 2);
  CHECK(n2.held_share(file_id, 1)->value != n2.held_share(file_id, 2)->value);
}

TEST_CASE("empty publish content is rejected") {
  auto scenario = base_scenario(3);
  Simulator simulator(scenario);
  chain::Ledger ledger;
  store::DhtNetwork dht(2, 1024);
  Rng rng(0);
  node::Counters counters;
  node::Services services{ledger, dht, simulator.directory(), rng, 0,
                          {"node-01", "node-02", "node-03"}, counters,
                          [](const node::Acquisition&) {}};
  CHECK_THROWS_AS(
      simulator.node_ref("node-01").publish(services, "empty.bin", {}, {}),
      EmptyFile);
}

TEST_CASE("scenario config validation") {
  SUBCASE("unknown behavior") {
    const json j{{"nodes", json::array({json{{"id", "a"}, {"behavior", "evil"}}})}};
    CHECK_THROWS_AS(Scenario::from_json(j), ConfigError);
  }

  SUBCASE("duplicate node ids") {
    const json j{{"nodes", json::array({json{{"id", "a"}}, json{{"id", "a"}}})}};
    CHECK_THROWS_AS(Scenario::from_json(j), ConfigError);
  }

  SUBCASE("unknown actor names the offending field") {
    const json j{{"nodes", json::array({json{{"id", "a"}}})},
                 {"actions", json::array({json{{"round", 1},
                                               {"actor", "ghost"},
                                               {"action", "fetch"}}})}};
    try {
      Scenario::from_json(j);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("/actions/0") != std::string::npos);
    }
  }

  SUBCASE("decreasing rounds") {
    const json j{
        {"nodes", json::array({json{{"id", "a"}}})},
        {"actions",
         json::array({json{{"round", 3}, {"actor", "a"}, {"action", "fetch"}},
                      json{{"round", 1}, {"actor", "a"}, {"action", "fetch"}}})}};
    CHECK_THROWS_AS(Scenario::from_json(j), ConfigError);
  }
}

TEST_CASE("determinism: same scenario and seed give identical ledger and report") {
  const auto scenario_path =
      std::filesystem::path(POOL_SCENARIO_DIR) / "honest_fetch.json";
  const auto dir = temp_dir();

  auto run_once = [&](const std::string& tag) {
    Simulator simulator(Scenario::from_file(scenario_path));
    const auto report = simulator.run(dir / (tag + ".log"));
    std::ifstream in(dir / (tag + ".log"), std::ios::binary);
    std::string ledger_bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
    return std::make_pair(ledger_bytes, report.dump());
  };

  const auto first = run_once("a");
  const auto second = run_once("b");
  CHECK(first.first == second.first);
  CHECK(first.second == second.second);
  CHECK_FALSE(first.first.empty());
}

TEST_CASE("two files from different sources, fetched crosswise") {
  auto scenario = base_scenario(4, 5);
  scenario.actions.push_back(make_action(
      1, "node-01", "publish", json{{"file_name", "one.bin"}, {"content_size", 1500}}));
  scenario.actions.push_back(make_action(
      2, "node-02", "publish", json{{"file_name", "two.bin"}, {"content_size", 2500}}));
  scenario.actions.push_back(make_action(4, "node-03", "fetch",
                                         json{{"file_name", "one.bin"}}));
  scenario.actions.push_back(make_action(5, "node-04", "fetch",
                                         json{{"file_name", "two.bin"}}));
  Simulator simulator(scenario);
  simulator.run(temp_dir() / "ledger.log");

  REQUIRE(simulator.node_ref("node-03").fetch_outcomes().size() == 1);
  REQUIRE(simulator.node_ref("node-04").fetch_outcomes().size() == 1);
  CHECK(simulator.node_ref("node-03").fetch_outcomes()[0].status ==
        node::FetchOutcome::Status::Ok);
  CHECK(simulator.node_ref("node-04").fetch_outcomes()[0].status ==
        node::FetchOutcome::Status::Ok);

  // audit separates the two files cleanly
  std::map<std::string, std::set<std::string>> proven;
  std::size_t distributed = 0;
  for (const auto& event : simulator.replayed().events) {
    if (event.kind == audit::EventKind::AccessProven) {
      proven[event.file_id].insert(event.actor);
    }
    if (event.kind == audit::EventKind::ShareDistributed) ++distributed;
  }
  CHECK(distributed == 8);  // 4 holders per file
  REQUIRE(proven.size() == 2);
  const auto& manifests = simulator.node_ref("node-01").manifests();
  for (const auto& [file_id, manifest] : manifests) {
    const std::string expected =
        manifest.file_name == "one.bin" ? "node-03" : "node-04";
    CHECK(proven.at(file_id) == std::set<std::string>{expected});
  }
}

TEST_CASE("a node added later catches up from the chain history") {
  auto scenario = base_scenario(4);
  scenario.actions.push_back(make_action(
      1, "node-01", "publish", json{{"file_name", "h.bin"}, {"content_size", 900}}));
  scenario.actions.push_back(
      make_action(4, "node-01", "add_node", json{{"id", "node-99"}}));
  scenario.rounds = 8;
  Simulator simulator(scenario);
  simulator.run(temp_dir() / "ledger.log");

  // the newcomer knows the manifest and version info from replayed history
  auto& late = simulator.node_ref("node-99");
  REQUIRE(late.manifests().size() == 1);
  CHECK(late.newest_version(late.manifests().begin()->first) == 1);
  // but holds no share: it was not assigned one
  CHECK_FALSE(late.held_share(late.manifests().begin()->first, 1).has_value());
}
