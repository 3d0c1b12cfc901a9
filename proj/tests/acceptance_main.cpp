// Acceptance suite: one check per shipped guarantee, one PASS/FAIL line each.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pool/audit.hpp"
#include "pool/chain.hpp"
#include "pool/errors.hpp"
#include "pool/secret_sharing.hpp"
#include "pool/sim.hpp"

using namespace pool;
using json = nlohmann::json;

namespace {

namespace fs = std::filesystem;

int failures = 0;

void criterion(int number, const std::string& description,
               const std::function<void()>& body) {
  try {
    body();
    std::printf("[PASS] criterion %2d: %s\n", number, description.c_str());
  } catch (const std::exception& e) {
    ++failures;
    std::printf("[FAIL] criterion %2d: %s\n        %s\n", number,
                description.c_str(), e.what());
  }
}

void require(bool condition, const std::string& what) {
  if (!condition) throw Error(what);
}

const std::vector<std::string> kScenarios = {
    "honest_fetch",    "accumulated_blocks", "silent_minority",
    "silent_majority", "wrong_shares",       "wrong_share_flood",
    "junk_upload",     "revocation",         "reissue_topology",
    "branch_revert",   "collusion_cheat"};

fs::path scenario_path(const std::string& name) {
  return fs::path(POOL_SCENARIO_DIR) / (name + ".json");
}

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "pool_acceptance";
  fs::create_directories(dir);
  return dir;
}

struct RunArtifacts {
  json report;
  std::string report_bytes;
  std::string ledger_bytes;
};

RunArtifacts run_scenario(const std::string& name, const std::string& tag) {
  const auto ledger_path = work_dir() / (name + "_" + tag + ".log");
  sim::Simulator simulator(sim::Scenario::from_file(scenario_path(name)));
  const auto report = simulator.run(ledger_path);
  require(report.all_assertions_passed,
          name + ": scenario-level assertions failed");
  RunArtifacts artifacts;
  artifacts.report = report.body;
  artifacts.report_bytes = report.dump();
  std::ifstream in(ledger_path, std::ios::binary);
  artifacts.ledger_bytes.assign((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  return artifacts;
}

using AccessSet = std::set<std::pair<std::string, std::string>>;

AccessSet effective_access_full(const json& report) {
  AccessSet set;
  for (const auto& entry : report.at("effective_access_full")) {
    set.insert({entry.at("node_id").get<std::string>(),
                entry.at("file_id").get<std::string>()});
  }
  return set;
}

AccessSet ground_truth_fetches(const json& report) {
  AccessSet set;
  for (const auto& a : report.at("acquisitions")) {
    if (a.at("kind") == "fetch") {
      set.insert({a.at("node_id").get<std::string>(),
                  a.at("file_id").get<std::string>()});
    }
  }
  return set;
}

// --------------------------------------------------------------------------

void check_threshold_rule() {
  const std::uint32_t expected[12] = {1, 2, 2, 3, 4, 4, 5, 6, 6, 7, 8, 8};
  for (std::uint32_t k = 1; k <= 12; ++k) {
    const std::uint32_t ceil_two_thirds = (2 * k + 2) / 3;
    require(expected[k - 1] == ceil_two_thirds, "frozen table is wrong");
    require(sharing::derive_threshold(k) == expected[k - 1],
            "derive_threshold(" + std::to_string(k) + ") != ceil(2k/3)");
  }
}

void check_shamir_correctness() {
  Rng rng(2024);
  for (std::uint32_t k = 1; k <= 7; ++k) {
    const auto key = crypto::generate_key(rng);
    const auto scheme = sharing::ShareScheme::derive(k, 1, rng);
    const auto shares = sharing::split(key, "accept", scheme, rng);
    for (const auto& pick : oracle::subsets(k, scheme.n)) {
      std::vector<sharing::SecretShare> subset;
      for (auto i : pick) subset.push_back(shares[i]);
      const auto secret = sharing::reconstruct(subset, scheme);
      require(secret.key == key && secret.salt == scheme.salt,
              "n-subset failed to reconstruct key||salt at k=" +
                  std::to_string(k));
    }

    // information-theoretic blankness below the threshold, 1-byte secret
    if (scheme.n < 2) continue;
    const Bytes one_byte{rng.next_byte()};
    const auto tiny = sharing::split_bytes(one_byte, "accept1", k, scheme.n, 1, rng);
    for (const auto& pick : oracle::subsets(k, scheme.n - 1)) {
      for (int candidate = 0; candidate < 256; ++candidate) {
        std::vector<oracle::Point> points;
        points.push_back({0, static_cast<std::uint8_t>(candidate)});
        for (auto i : pick) {
          points.push_back({static_cast<std::uint8_t>(tiny[i].index),
                            tiny[i].value[0]});
        }
        require(oracle::consistent(points),
                "candidate secret excluded by n-1 shares at k=" +
                    std::to_string(k));
      }
    }
  }
}

void check_wrong_share_boundary() {
  Rng rng(5150);

  auto run_case = [&rng](std::uint32_t k, std::uint32_t n,
                         std::uint32_t responses, std::uint32_t wrong) {
    const auto key = crypto::generate_key(rng);
    sharing::ShareScheme scheme;
    scheme.k = k;
    scheme.n = n;
    scheme.version = 1;
    scheme.salt = rng.bytes(16);
    auto shares = sharing::split(key, "bdy", scheme, rng);
    shares.resize(responses);
    std::set<std::uint32_t> corrupted;
    for (std::uint32_t w = 0; w < wrong; ++w) {
      shares[w].value = rng.bytes(shares[w].value.size());
      corrupted.insert(shares[w].index);
    }
    const auto validator = [&key](const crypto::SymmetricKey& candidate) {
      return candidate == key;
    };

    bool implementation_success = true;
    std::set<std::uint32_t> reported_bad;
    try {
      const auto result =
          sharing::reconstruct_with_faults(shares, scheme, validator);
      reported_bad = std::set<std::uint32_t>(result.bad_indices.begin(),
                                             result.bad_indices.end());
    } catch (const ReconstructionImpossible&) {
      implementation_success = false;
    }

    // independent oracle: some size-n subset avoids every corrupted share
    bool oracle_success = false;
    std::set<std::uint32_t> oracle_bad;
    for (auto index : corrupted) oracle_bad.insert(index);
    for (const auto& pick : oracle::subsets(responses, n)) {
      bool clean = true;
      for (auto i : pick) {
        if (corrupted.count(shares[i].index) != 0) clean = false;
      }
      if (clean) oracle_success = true;
    }
    require(oracle_success == (wrong <= responses - n),
            "oracle disagrees with the closed-form boundary");
    require(implementation_success == oracle_success,
            "implementation disagrees with the oracle at k=" +
                std::to_string(k) + " responses=" + std::to_string(responses) +
                " wrong=" + std::to_string(wrong));
    if (implementation_success) {
      require(reported_bad == oracle_bad, "wrong shares misidentified");
    }
  };

  for (std::uint32_t k = 2; k <= 7; ++k) {
    const std::uint32_t n = sharing::derive_threshold(k);
    for (std::uint32_t responses = n; responses <= k; ++responses) {
      for (std::uint32_t wrong = 0; wrong <= responses; ++wrong) {
        run_case(k, n, responses, wrong);
      }
    }
  }

  // the denial attack at one third of the pool: with all k responding, the
  // minimal wrong-responder count that kills every subset is ceil(k/3)+1;
  // at exactly ceil(k/3) one clean subset survives
  for (std::uint32_t k : {6u, 9u, 12u}) {
    const std::uint32_t n = sharing::derive_threshold(k);
    const std::uint32_t third = (k + 2) / 3;
    require(third == k - n, "arithmetic sanity: ceil(k/3) = k - ceil(2k/3)");
    run_case(k, n, k, third);      // still succeeds
    run_case(k, n, k, third + 1);  // reconstruction impossible
  }
}

void check_segmentation() {
  Rng rng(90210);
  const std::size_t batches = 10;
  const std::size_t per_batch = 100;
  for (std::size_t batch = 0; batch < batches; ++batch) {
    std::vector<chain::ChainTransaction> pile;
    std::vector<std::pair<std::string, Bytes>> expected;
    for (std::size_t m = 0; m < per_batch; ++m) {
      const std::size_t size = 1 + rng.below(100 * 1024);
      const Bytes message = rng.bytes(size);
      const std::string submitter = "node-" + std::to_string(m % 7);
      const auto txs = chain::segment(message, submitter);
      require(txs.size() == (size + 68) / 69, "segment count != ceil(len/69)");

      for (std::size_t t = 0; t < txs.size(); ++t) {
        require(txs[t].outputs.size() == 2, "expected one data + one link");
        const auto& data = txs[t].outputs[0];
        require(data.kind == chain::TxOutput::Kind::Data, "data output first");
        if (t + 1 < txs.size()) {
          require(data.payload.size() == 69, "non-final segment must be 69 B");
        }
        const std::string link = txs[t].link_payload();
        const bool is_first = t == 0;
        const bool is_last = t + 1 == txs.size();
        std::string expected_link = is_first ? chain::kHeadMarker
                                             : txs[t - 1].txid;
        if (is_last) expected_link += chain::kTerminalSuffix;
        require(link == expected_link, "marker rule violated");
      }
      for (const auto& tx : txs) pile.push_back(tx);
      expected.emplace_back(submitter, message);
    }

    // arbitrary permutation within and across blocks
    for (std::size_t i = pile.size(); i > 1; --i) {
      std::swap(pile[i - 1], pile[rng.below(i)]);
    }
    std::vector<chain::Block> blocks;
    std::string prev(64, '0');
    for (std::size_t offset = 0; offset < pile.size(); offset += 997) {
      chain::Block b;
      b.height = blocks.size();
      b.prev = prev;
      const auto end = std::min(offset + 997, pile.size());
      b.transactions.assign(pile.begin() + offset, pile.begin() + end);
      b.digest = chain::Block::compute_digest(b.height, b.prev, b.transactions);
      prev = b.digest;
      blocks.push_back(std::move(b));
    }

    const auto result = chain::reassemble(blocks);
    require(result.incomplete.empty(), "no chain may be incomplete");
    require(result.messages.size() == expected.size(),
            "every message must come back exactly once");
    std::multiset<Bytes> want;
    for (const auto& [submitter, message] : expected) want.insert(message);
    for (const auto& recovered : result.messages) {
      auto it = want.find(recovered.bytes);
      require(it != want.end(), "reassembled bytes differ");
      want.erase(it);
    }
    require(want.empty(), "message lost in reassembly");
  }
}

void check_proof_soundness() {
  for (const auto& name : kScenarios) {
    const auto artifacts = run_scenario(name, "c5");
    const auto effective = effective_access_full(artifacts.report);
    const auto truth = ground_truth_fetches(artifacts.report);
    require(effective == truth,
            name + ": proven accesses != protocol-conformant acquisitions (" +
                std::to_string(effective.size()) + " vs " +
                std::to_string(truth.size()) + ")");
    // store-wide hygiene holds after every scenario, not just the junk one
    require(artifacts.report.at("block_diagnostics")
                .at("unannounced_blocks_stored") == 0,
            name + ": store audit found stray blocks");
    // conservation: no envelope lost or duplicated on its way through chain
    require(artifacts.report.at("reassembled_messages") ==
                artifacts.report.at("counters").at("messages"),
            name + ": reassembly lost or duplicated messages");
    require(artifacts.report.at("incomplete_chains") == 0,
            name + ": broken transaction chains");
  }
}

void check_accumulated_blocks() {
  const auto artifacts = run_scenario("accumulated_blocks", "c6");
  const auto& report = artifacts.report;
  require(report.at("counters").at("source_fallbacks") == 0,
          "no source fallback expected when all blocks are local");

  // the only plaintext acquisitions are the publish and one fetch that went
  // through a share request answered by >= n holders
  std::string fetch_reference;
  for (const auto& a : report.at("acquisitions")) {
    const std::string kind = a.at("kind").get<std::string>();
    require(kind == "publish" || kind == "fetch",
            "unexpected acquisition kind " + kind);
    if (kind == "fetch") {
      fetch_reference = a.at("message_reference").get<std::string>();
    }
  }
  require(!fetch_reference.empty(), "fetch must carry a message reference");

  bool requested = false;
  std::set<std::string> responders;
  for (const auto& event : report.at("events")) {
    if (event.at("kind") == "ShareRequested" &&
        event.value("message_reference", "") == fetch_reference) {
      requested = true;
    }
    if (event.at("kind") == "ShareResponded" &&
        event.value("message_reference", "") == fetch_reference) {
      responders.insert(event.at("actor").get<std::string>());
    }
  }
  require(requested, "plaintext obtained without a share request on chain");
  require(responders.size() >= 4,
          "fewer than n distinct holders answered the request");
  require(effective_access_full(report) == ground_truth_fetches(report),
          "proof does not match the instrumented acquisition");
}

void check_revocation_and_versioning() {
  // post-revocation fetches die in reconstruction
  const auto revocation = run_scenario("revocation", "c7");
  bool impossible_seen = false;
  for (const auto& fetch : revocation.report.at("fetches")) {
    if (fetch.at("actor") == "node-03") {
      require(fetch.at("status") == "reconstruction_impossible",
              "post-revocation fetch must fail reconstruction");
      impossible_seen = true;
    }
  }
  require(impossible_seen, "revocation scenario lost the failing fetch");

  // mixed-version reconstruction always fails
  Rng rng(31337);
  const auto key = crypto::generate_key(rng);
  const auto v1 = sharing::ShareScheme::derive(6, 1, rng);
  const auto v2 = sharing::ShareScheme::derive(6, 2, rng);
  auto shares = sharing::split(key, "mix", v1, rng);
  const auto newer = sharing::split(key, "mix", v2, rng);
  shares[0] = newer[0];
  try {
    sharing::reconstruct(shares, v1);
    throw Error("mixed-version reconstruction must not succeed");
  } catch (const VersionMismatch&) {
  }

  // pool shrink 6 -> 4 with reissue restores fetchability at threshold 3
  const auto reissue = run_scenario("reissue_topology", "c7");
  bool ok_fetch = false;
  for (const auto& fetch : reissue.report.at("fetches")) {
    if (fetch.at("actor") == "node-02" && fetch.at("status") == "ok") {
      require(fetch.at("version") == 2, "fetch must target the new version");
      require(fetch.at("responses_received") == 3,
              "expected exactly 3 = ceil(2*4/3) responses");
      ok_fetch = true;
    }
  }
  require(ok_fetch, "post-reissue fetch did not succeed");
}

void check_evidence_retention() {
  const auto artifacts = run_scenario("branch_revert", "c8");
  const auto& report = artifacts.report;

  // the revert really removed the proof from the main branch...
  std::size_t main_proven = 0;
  for (const auto& entry : report.at("effective_access")) {
    (void)entry;
    ++main_proven;
  }
  require(main_proven == 0, "revert should strip AccessProven from main");

  // ...and the retained branch still carries the exact pre-revert set
  require(effective_access_full(report) == ground_truth_fetches(report),
          "retained branches lost access evidence");
}

void check_junk_defense() {
  const auto artifacts = run_scenario("junk_upload", "c9");
  const auto& report = artifacts.report;
  require(report.at("block_diagnostics").at("unannounced_blocks_stored") == 0,
          "an unannounced block survived in a store");
  const auto rejected =
      report.at("counters").at("rejected_blocks").get<std::uint64_t>();
  require(rejected > 0, "junk uploads must be counted");
  // the junk uploader pushes one block per round and every one is rejected
  const auto rejects_of_junker = report.at("block_diagnostics")
                                     .at("rejected_uploads")
                                     .at("node-05")
                                     .get<std::uint64_t>();
  require(rejects_of_junker == rejected, "rejections misattributed");

  bool offense = false;
  for (const auto& o : report.at("offenses")) {
    if (o.at("offense") == "JunkUpload" && o.at("node_id") == "node-05") {
      require(o.at("count").get<std::uint64_t>() == rejected,
              "JunkUpload offense count != rejected uploads");
      offense = true;
    }
  }
  require(offense, "junk uploader not identified");
}

void check_determinism() {
  for (const auto& name : kScenarios) {
    const auto first = run_scenario(name, "d1");
    const auto second = run_scenario(name, "d2");
    require(!first.ledger_bytes.empty(), name + ": empty ledger log");
    require(first.ledger_bytes == second.ledger_bytes,
            name + ": ledger logs differ between identical runs");
    require(first.report_bytes == second.report_bytes,
            name + ": reports differ between identical runs");
  }
}

}  // namespace

int main() {
  criterion(1, "threshold rule n = ceil(2k/3) for k in 1..12",
            check_threshold_rule);
  criterion(2, "Shamir reconstruction and below-threshold blankness (k <= 7)",
            check_shamir_correctness);
  criterion(3, "wrong-share boundary: success iff w <= n' - n, denial at a third",
            check_wrong_share_boundary);
  criterion(4, "segmentation: 1000 messages, shuffled round trip, marker rules",
            check_segmentation);
  criterion(5, "proof soundness and completeness across all bundled scenarios",
            check_proof_soundness);
  criterion(6, "accumulated blocks still force a provable share request",
            check_accumulated_blocks);
  criterion(7, "revocation, version mixing and reissue after pool shrink",
            check_revocation_and_versioning);
  criterion(8, "reverted branches retain access evidence",
            check_evidence_retention);
  criterion(9, "junk uploads are dropped and counted",
            check_junk_defense);
  criterion(10, "byte-identical ledgers and reports under a fixed seed",
            check_determinism);

  if (failures != 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all 10 acceptance criteria passed\n");
  return 0;
}
