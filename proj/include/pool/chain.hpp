#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pool/bytes.hpp"

namespace pool::chain {

// A data output carries at most 69 payload bytes of its 70-byte slot (one
// byte is the length). The link output is 64 chars (head marker or the
// previous TXID) or 68 chars for the terminal transaction of a chain.
inline constexpr std::size_t kMaxSegment = 69;
inline constexpr std::size_t kTxidHexLen = 64;
inline constexpr std::size_t kMaxOutputsPerTx = 250;
inline const std::string kHeadMarker(kTxidHexLen, 'X');
inline const std::string kTerminalSuffix = "XXXX";

struct TxOutput {
  enum class Kind { Data, Link };
  Kind kind = Kind::Data;
  Bytes payload;

  bool operator==(const TxOutput&) const = default;
};

struct ChainTransaction {
  std::string txid;  // hex digest of the canonical serialization
  std::string submitter;
  std::vector<TxOutput> outputs;

  static std::string compute_txid(const std::string& submitter,
                                  const std::vector<TxOutput>& outputs);
  std::string link_payload() const;  // throws Error if not exactly one link

  bool operator==(const ChainTransaction&) const = default;
};

struct Block {
  std::uint64_t height = 0;
  std::string prev;  // digest of the previous block; 64 zeros for genesis
  std::vector<ChainTransaction> transactions;
  std::string digest;

  static std::string compute_digest(std::uint64_t height,
                                    const std::string& prev,
                                    const std::vector<ChainTransaction>& txs);

  bool operator==(const Block&) const = default;
};

struct RetainedBranch {
  std::uint64_t fork_height = 0;  // last height still on the main branch
  std::vector<Block> blocks;

  bool operator==(const RetainedBranch&) const = default;
};

struct SegmentationConfig {
  std::size_t segments_per_transaction = 1;  // up to 249 data outputs + link

  bool operator==(const SegmentationConfig&) const = default;
};

// Splits a message into ≤69-byte segments carried by chained transactions:
// the first transaction's link output is 64 "X", each subsequent one carries the
// previous TXID, and the terminal link gets "XXXX" appended.
std::vector<ChainTransaction> segment(ByteView message,
                                      const std::string& submitter,
                                      const SegmentationConfig& cfg = {});

struct ReassembledMessage {
  std::string submitter;
  Bytes bytes;
  std::string head_txid;
  std::string terminal_txid;
  std::uint64_t terminal_height = 0;
  std::vector<std::string> txids;  // chain order, head first
};

struct ReassemblyResult {
  std::vector<ReassembledMessage> messages;  // ordered by terminal position
  std::vector<std::string> incomplete;       // terminal txids of broken chains
};

// Order-independent: follows TXID links, so transactions may be mined in any
// order and interleaved with other messages.
ReassemblyResult reassemble(std::span<const Block> blocks);

// Simulated chain: pending transactions are drained into one block per round.
class Ledger {
 public:
  explicit Ledger(SegmentationConfig cfg = {}) : cfg_(cfg) {}

  // Segments the envelope bytes and enqueues them; returns the txids.
  std::vector<std::string> submit(const std::string& node, ByteView envelope);

  const Block& advance_round();

  // Moves every block above `height` into a retained branch. Nothing is
  // destroyed: reverted evidence stays replayable.
  void revert_to(std::uint64_t height);

  // Appends an already-mined block when replaying a persisted log. The block
  // must extend the current main branch. Throws ReplayError.
  void restore_block(Block block);

  const std::vector<Block>& main_branch() const { return main_; }
  const std::vector<RetainedBranch>& retained_branches() const {
    return retained_;
  }
  const std::vector<ChainTransaction>& pending() const { return pending_; }
  const SegmentationConfig& config() const { return cfg_; }

  std::uint64_t total_transactions() const;  // main + retained + pending

  bool operator==(const Ledger&) const = default;

 private:
  SegmentationConfig cfg_;
  std::vector<Block> main_;
  std::vector<RetainedBranch> retained_;
  std::vector<ChainTransaction> pending_;
};

// Persistence: one JSON object per line, {"block": ...} or {"revert": h}.
void write_block_line(std::ostream& out, const Block& block);
void write_revert_line(std::ostream& out, std::uint64_t height);
// Rebuilds the ledger (including retained branches) from a log stream.
// Throws ReplayError naming the offending line.
Ledger load_ledger(std::istream& in, SegmentationConfig cfg = {});

}  // namespace pool::chain
