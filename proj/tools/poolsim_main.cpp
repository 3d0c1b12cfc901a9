// poolsim: deterministic shared-data-pool simulator, ledger audit and
// denial-claim verification.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "pool/audit.hpp"
#include "pool/chain.hpp"
#include "pool/errors.hpp"
#include "pool/sim.hpp"

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kAssertionsFailed = 1;
constexpr int kConfigError = 2;

pool::chain::Ledger load_ledger_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw pool::ConfigError("cannot open ledger log " + path.string());
  return pool::chain::load_ledger(in);
}

pool::crypto::Directory load_directory(const std::filesystem::path& ledger_path,
                                       std::string explicit_path) {
  const std::filesystem::path path =
      explicit_path.empty()
          ? pool::sim::Simulator::directory_sidecar(ledger_path)
          : std::filesystem::path(explicit_path);
  std::ifstream in(path);
  if (!in) {
    throw pool::ConfigError("cannot open directory file " + path.string());
  }
  json j;
  in >> j;
  return pool::audit::directory_from_json(j);
}

int cmd_run(const std::string& scenario_path, std::string out_path,
            std::string ledger_path) {
  const auto scenario = pool::sim::Scenario::from_file(scenario_path);
  pool::sim::Simulator simulator(scenario);
  const auto report = simulator.run(ledger_path);

  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw pool::ConfigError("cannot write report " + out_path);
  out << report.dump();

  std::size_t passed = 0;
  const auto& assertions = report.body.at("assertions");
  for (const auto& a : assertions) {
    if (a.at("passed").get<bool>()) ++passed;
  }
  std::cout << "scenario " << scenario.name << ": " << passed << "/"
            << assertions.size() << " assertions passed, report at "
            << out_path << ", ledger at " << ledger_path << "\n";
  if (!report.all_assertions_passed) {
    for (const auto& a : assertions) {
      if (!a.at("passed").get<bool>()) {
        std::cout << "  FAILED " << a.at("assert").get<std::string>();
        if (a.contains("detail")) {
          std::cout << " (" << a.at("detail").get<std::string>() << ")";
        }
        std::cout << "\n";
      }
    }
    return kAssertionsFailed;
  }
  return kOk;
}

int cmd_audit(const std::string& ledger_path, const std::string& file_filter,
              bool as_json, std::string directory_path, bool include_retained) {
  const auto ledger = load_ledger_file(ledger_path);
  const auto directory = load_directory(ledger_path, std::move(directory_path));
  const auto replayed = pool::audit::replay(ledger, directory, include_retained);

  std::vector<pool::audit::AuditEvent> events;
  for (const auto& event : replayed.events) {
    if (file_filter.empty() || event.file_id == file_filter) {
      events.push_back(event);
    }
  }

  std::set<std::string> files;
  for (const auto& event : events) {
    if (!event.file_id.empty()) files.insert(event.file_id);
  }

  if (as_json) {
    json out{{"format_version", 1}};
    json events_json = json::array();
    for (const auto& event : events) events_json.push_back(event.to_json());
    out["events"] = events_json;
    json first_access = json::object();
    for (const auto& file_id : files) {
      json per_node = json::object();
      for (const auto& [node_id, height] :
           pool::audit::first_access_report(replayed.events, file_id)) {
        per_node[node_id] = height;
      }
      first_access[file_id] = per_node;
    }
    out["first_access"] = first_access;
    std::cout << out.dump(2) << "\n";
    return kOk;
  }

  for (const auto& event : events) {
    std::cout << "h=" << event.block_height << " "
              << pool::audit::event_kind_name(event.kind) << " "
              << event.actor;
    if (!event.file_id.empty()) std::cout << " file=" << event.file_id;
    if (event.version != 0) std::cout << " v=" << event.version;
    if (!event.message_reference.empty()) {
      std::cout << " ref=" << event.message_reference;
    }
    std::cout << "\n";
  }
  for (const auto& file_id : files) {
    const auto report =
        pool::audit::first_access_report(replayed.events, file_id);
    if (report.empty()) continue;
    std::cout << "first access of " << file_id << ":\n";
    for (const auto& [node_id, height] : report) {
      std::cout << "  " << node_id << " at height " << height << "\n";
    }
  }
  return kOk;
}

int cmd_verify_claim(const std::string& ledger_path,
                     const std::string& claim_path, std::string directory_path,
                     std::string blocks_path) {
  const auto ledger = load_ledger_file(ledger_path);
  const auto directory = load_directory(ledger_path, std::move(directory_path));

  std::ifstream claim_in(claim_path);
  if (!claim_in) {
    throw pool::ConfigError("cannot open claim file " + claim_path);
  }
  json claim_json;
  claim_in >> claim_json;
  const auto claim = pool::audit::DenialClaim::from_json(claim_json);

  const std::filesystem::path blocks_file =
      blocks_path.empty() ? pool::sim::Simulator::blocks_sidecar(ledger_path)
                          : std::filesystem::path(blocks_path);
  std::ifstream blocks_in(blocks_file);
  if (!blocks_in) {
    throw pool::ConfigError("cannot open block-store dump " +
                            blocks_file.string());
  }
  json blocks_dump;
  blocks_in >> blocks_dump;

  const auto result = pool::audit::verify_denial(
      claim, ledger, directory,
      pool::audit::ciphertext_from_store_dump(blocks_dump));
  for (const auto& line : result.transcript) std::cout << line << "\n";
  std::cout << (result.verdict == pool::audit::DenialVerdict::Upheld
                    ? "Upheld"
                    : "Refuted")
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"private shared-data-pool protocol simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string report_path = "report.json";
  std::string ledger_path = "ledger.log";
  auto* run = app.add_subcommand("run", "execute a scenario");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", report_path, "report output path");
  run->add_option("--ledger", ledger_path, "ledger log output path");

  std::string audit_ledger;
  std::string file_filter;
  std::string directory_path;
  bool as_json = false;
  bool include_retained = false;
  auto* audit_cmd = app.add_subcommand("audit", "replay a ledger log");
  audit_cmd->add_option("ledger", audit_ledger, "ledger log file")->required();
  audit_cmd->add_option("--file", file_filter, "filter events by file id");
  audit_cmd->add_flag("--json", as_json, "emit JSON instead of text");
  audit_cmd->add_option("--directory", directory_path,
                        "node directory file (default: <ledger>.directory.json)");
  audit_cmd->add_flag("--include-retained", include_retained,
                      "also replay retained branches");

  std::string claim_ledger;
  std::string claim_path;
  std::string claim_directory;
  std::string blocks_path;
  auto* verify = app.add_subcommand("verify-claim", "verify a denial claim");
  verify->add_option("ledger", claim_ledger, "ledger log file")->required();
  verify->add_option("claim", claim_path, "denial claim JSON file")->required();
  verify->add_option("--directory", claim_directory,
                     "node directory file (default: <ledger>.directory.json)");
  verify->add_option("--blocks", blocks_path,
                     "block-store dump (default: <ledger>.blocks.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage or errors
    return e.get_exit_code() == 0 ? kOk : kConfigError;
  }

  try {
    if (run->parsed()) return cmd_run(scenario_path, report_path, ledger_path);
    if (audit_cmd->parsed()) {
      return cmd_audit(audit_ledger, file_filter, as_json, directory_path,
                       include_retained);
    }
    if (verify->parsed()) {
      return cmd_verify_claim(claim_ledger, claim_path, claim_directory,
                              blocks_path);
    }
  } catch (const pool::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}
