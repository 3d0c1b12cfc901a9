#include "pool/chain.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "pool/crypto.hpp"
#include "pool/errors.hpp"

namespace pool::chain {

using nlohmann::json;

namespace {

bool is_head_marker(const std::string& link) {
  return link == kHeadMarker;
}

bool is_terminal_link(const std::string& link) {
  return link.size() == kTxidHexLen + kTerminalSuffix.size() &&
         link.compare(kTxidHexLen, kTerminalSuffix.size(), kTerminalSuffix) ==
             0;
}

json output_to_json(const TxOutput& o) {
  if (o.kind == TxOutput::Kind::Data) {
    return json{{"kind", "data"}, {"data", to_base64(o.payload)}};
  }
  return json{{"kind", "link"}, {"link", to_string(o.payload)}};
}

TxOutput output_from_json(const json& j) {
  TxOutput o;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "data") {
    o.kind = TxOutput::Kind::Data;
    o.payload = from_base64(j.at("data").get<std::string>());
  } else if (kind == "link") {
    o.kind = TxOutput::Kind::Link;
    o.payload = to_bytes(j.at("link").get<std::string>());
  } else {
    throw ParseError("unknown output kind \"" + kind + "\"");
  }
  return o;
}

json block_to_json(const Block& b) {
  json txs = json::array();
  for (const auto& tx : b.transactions) {
    json outputs = json::array();
    for (const auto& o : tx.outputs) outputs.push_back(output_to_json(o));
    txs.push_back(json{{"txid", tx.txid},
                       {"submitter", tx.submitter},
                       {"outputs", outputs}});
  }
  return json{{"height", b.height},
              {"prev", b.prev},
              {"digest", b.digest},
              {"transactions", txs}};
}

Block block_from_json(const json& j) {
  Block b;
  b.height = j.at("height").get<std::uint64_t>();
  b.prev = j.at("prev").get<std::string>();
  b.digest = j.at("digest").get<std::string>();
  for (const auto& tj : j.at("transactions")) {
    ChainTransaction tx;
    tx.txid = tj.at("txid").get<std::string>();
    tx.submitter = tj.at("submitter").get<std::string>();
    for (const auto& oj : tj.at("outputs")) {
      tx.outputs.push_back(output_from_json(oj));
    }
    b.transactions.push_back(std::move(tx));
  }
  return b;
}

}  // namespace

std::string ChainTransaction::compute_txid(
    const std::string& submitter, const std::vector<TxOutput>& outputs) {
  Bytes canonical;
  auto put_u32 = [&canonical](std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
      canonical.push_back(static_cast<std::uint8_t>((v >> shift) & 0xffu));
    }
  };
  put_u32(static_cast<std::uint32_t>(submitter.size()));
  canonical.insert(canonical.end(), submitter.begin(), submitter.end());
  put_u32(static_cast<std::uint32_t>(outputs.size()));
  for (const auto& o : outputs) {
    canonical.push_back(o.kind == TxOutput::Kind::Data ? 0x00 : 0x01);
    put_u32(static_cast<std::uint32_t>(o.payload.size()));
    canonical.insert(canonical.end(), o.payload.begin(), o.payload.end());
  }
  return crypto::hash(canonical).hex();
}

std::string ChainTransaction::link_payload() const {
  const TxOutput* link = nullptr;
  for (const auto& o : outputs) {
    if (o.kind == TxOutput::Kind::Link) {
      if (link != nullptr) throw Error("transaction with two link outputs");
      link = &o;
    }
  }
  if (link == nullptr) throw Error("transaction without a link output");
  return to_string(link->payload);
}

std::string Block::compute_digest(std::uint64_t height, const std::string& prev,
                                  const std::vector<ChainTransaction>& txs) {
  Bytes canonical;
  for (int shift = 0; shift < 64; shift += 8) {
    canonical.push_back(static_cast<std::uint8_t>((height >> shift) & 0xffu));
  }
  canonical.insert(canonical.end(), prev.begin(), prev.end());
  for (const auto& tx : txs) {
    canonical.insert(canonical.end(), tx.txid.begin(), tx.txid.end());
  }
  return crypto::hash(canonical).hex();
}

std::vector<ChainTransaction> segment(ByteView message,
                                      const std::string& submitter,
                                      const SegmentationConfig& cfg) {
  if (message.empty()) throw EmptyMessage("cannot segment an empty message");
  if (cfg.segments_per_transaction == 0 ||
      cfg.segments_per_transaction > kMaxOutputsPerTx - 1) {
    throw Error("segments_per_transaction must be in 1..249");
  }

  const std::size_t segment_count = (message.size() + kMaxSegment - 1) / kMaxSegment;
  const std::size_t tx_count =
      (segment_count + cfg.segments_per_transaction - 1) /
      cfg.segments_per_transaction;

  std::vector<ChainTransaction> txs;
  txs.reserve(tx_count);
  std::size_t offset = 0;
  std::string prev_txid;
  for (std::size_t t = 0; t < tx_count; ++t) {
    ChainTransaction tx;
    tx.submitter = submitter;
    for (std::size_t s = 0;
         s < cfg.segments_per_transaction && offset < message.size(); ++s) {
      const std::size_t len = std::min(kMaxSegment, message.size() - offset);
      TxOutput data{TxOutput::Kind::Data,
                    Bytes(message.begin() + offset,
                          message.begin() + offset + len)};
      tx.outputs.push_back(std::move(data));
      offset += len;
    }

    std::string link = (t == 0) ? kHeadMarker : prev_txid;
    if (t + 1 == tx_count) link += kTerminalSuffix;
    tx.outputs.push_back(TxOutput{TxOutput::Kind::Link, to_bytes(link)});

    tx.txid = ChainTransaction::compute_txid(tx.submitter, tx.outputs);
    prev_txid = tx.txid;
    txs.push_back(std::move(tx));
  }
  return txs;
}

ReassemblyResult reassemble(std::span<const Block> blocks) {
  struct Located {
    const ChainTransaction* tx;
    std::uint64_t height;
    std::size_t position;  // global scan position, for output ordering
  };

  std::map<std::string, Located> by_txid;
  std::vector<Located> terminals;
  std::size_t position = 0;
  for (const auto& block : blocks) {
    for (const auto& tx : block.transactions) {
      Located loc{&tx, block.height, position++};
      // duplicate txids can only appear when branch paths share a prefix;
      // first sighting wins
      if (!by_txid.emplace(tx.txid, loc).second) continue;
      if (is_terminal_link(tx.link_payload())) terminals.push_back(loc);
    }
  }

  ReassemblyResult result;
  for (const auto& terminal : terminals) {
    std::vector<const ChainTransaction*> reversed_chain;
    std::set<std::string> visited;
    bool complete = true;

    const ChainTransaction* current = terminal.tx;
    while (true) {
      if (!visited.insert(current->txid).second) {
        complete = false;  // link cycle; treat as broken
        break;
      }
      reversed_chain.push_back(current);
      std::string link = current->link_payload();
      if (is_terminal_link(link)) link.resize(kTxidHexLen);
      if (is_head_marker(link)) break;
      auto it = by_txid.find(link);
      if (it == by_txid.end()) {
        complete = false;
        break;
      }
      current = it->second.tx;
    }

    if (!complete) {
      result.incomplete.push_back(terminal.tx->txid);
      continue;
    }

    ReassembledMessage message;
    message.submitter = terminal.tx->submitter;
    message.terminal_txid = terminal.tx->txid;
    message.terminal_height = terminal.height;
    for (auto it = reversed_chain.rbegin(); it != reversed_chain.rend(); ++it) {
      message.txids.push_back((*it)->txid);
      for (const auto& o : (*it)->outputs) {
        if (o.kind == TxOutput::Kind::Data) {
          message.bytes.insert(message.bytes.end(), o.payload.begin(),
                               o.payload.end());
        }
      }
    }
    message.head_txid = message.txids.front();
    result.messages.push_back(std::move(message));
  }

  // Terminal scan order already is block order; keep it stable explicitly.
  std::stable_sort(result.messages.begin(), result.messages.end(),
                   [&by_txid](const auto& a, const auto& b) {
                     return by_txid.at(a.terminal_txid).position <
                            by_txid.at(b.terminal_txid).position;
                   });
  return result;
}

std::vector<std::string> Ledger::submit(const std::string& node,
                                        ByteView envelope) {
  std::vector<ChainTransaction> txs = segment(envelope, node, cfg_);
  std::vector<std::string> txids;
  txids.reserve(txs.size());
  for (auto& tx : txs) {
    txids.push_back(tx.txid);
    pending_.push_back(std::move(tx));
  }
  return txids;
}

const Block& Ledger::advance_round() {
  Block block;
  block.height = main_.empty() ? 0 : main_.back().height + 1;
  block.prev = main_.empty() ? std::string(kTxidHexLen, '0') : main_.back().digest;
  block.transactions = std::move(pending_);
  pending_.clear();
  block.digest =
      Block::compute_digest(block.height, block.prev, block.transactions);
  main_.push_back(std::move(block));
  return main_.back();
}

void Ledger::revert_to(std::uint64_t height) {
  if (main_.empty() || height >= main_.back().height) {
    throw InvalidHeight("revert_to(" + std::to_string(height) +
                        ") on chain of height " +
                        (main_.empty() ? std::string("<empty>")
                                       : std::to_string(main_.back().height)));
  }
  RetainedBranch branch;
  branch.fork_height = height;
  auto first_removed = main_.begin();
  while (first_removed != main_.end() && first_removed->height <= height) {
    ++first_removed;
  }
  branch.blocks.assign(first_removed, main_.end());
  main_.erase(first_removed, main_.end());
  retained_.push_back(std::move(branch));
}

void Ledger::restore_block(Block block) {
  for (const auto& tx : block.transactions) {
    if (tx.txid != ChainTransaction::compute_txid(tx.submitter, tx.outputs)) {
      throw ReplayError("txid mismatch for " + tx.txid);
    }
  }
  if (block.digest !=
      Block::compute_digest(block.height, block.prev, block.transactions)) {
    throw ReplayError("block digest mismatch at height " +
                      std::to_string(block.height));
  }
  const std::string expected_prev =
      main_.empty() ? std::string(kTxidHexLen, '0') : main_.back().digest;
  const std::uint64_t expected_height =
      main_.empty() ? 0 : main_.back().height + 1;
  if (block.prev != expected_prev || block.height != expected_height) {
    throw ReplayError("block does not extend the main branch");
  }
  main_.push_back(std::move(block));
}

std::uint64_t Ledger::total_transactions() const {
  std::uint64_t total = pending_.size();
  for (const auto& b : main_) total += b.transactions.size();
  for (const auto& branch : retained_) {
    for (const auto& b : branch.blocks) total += b.transactions.size();
  }
  return total;
}

void write_block_line(std::ostream& out, const Block& block) {
  out << json{{"block", block_to_json(block)}}.dump() << '\n';
}

void write_revert_line(std::ostream& out, std::uint64_t height) {
  out << json{{"revert", height}}.dump() << '\n';
}

Ledger load_ledger(std::istream& in, SegmentationConfig cfg) {
  Ledger ledger(cfg);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ReplayError(where + ": " + e.what());
    }
    try {
      if (j.contains("block")) {
        ledger.restore_block(block_from_json(j.at("block")));
      } else if (j.contains("revert")) {
        ledger.revert_to(j.at("revert").get<std::uint64_t>());
      } else {
        throw ReplayError("expected a \"block\" or \"revert\" object");
      }
    } catch (const ReplayError& e) {
      throw ReplayError(where + ": " + e.what());
    } catch (const Error& e) {
      throw ReplayError(where + ": " + e.what());
    } catch (const json::exception& e) {
      throw ReplayError(where + ": " + e.what());
    }
  }
  return ledger;
}

}  // namespace pool::chain
