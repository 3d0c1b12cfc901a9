#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pool/bytes.hpp"
#include "pool/crypto.hpp"
#include "pool/rng.hpp"

namespace pool::sharing {

inline constexpr std::size_t kSaltSize = 16;

// Threshold ⌈2k/3⌉: a key stays recoverable while at most a third of the
// pool misbehaves, and recovering it off the record needs two thirds to
// collude. Throws InvalidPoolSize for k = 0.
std::uint32_t derive_threshold(std::uint32_t k);

// Parameters of one version of a file's share set. k is the pool size when
// the version was issued, n the reconstruction threshold, and salt a random
// value folded into the shared secret so shares from different versions can
// never be combined.
struct ShareScheme {
  std::uint32_t k = 0;
  std::uint32_t n = 0;
  std::uint32_t version = 1;
  Bytes salt;

  // k nodes, n = ⌈2k/3⌉, fresh random salt.
  static ShareScheme derive(std::uint32_t k, std::uint32_t version, Rng& rng);
};

struct SecretShare {
  std::string file_id;
  std::uint32_t index = 0;  // x coordinate, 1..k
  std::uint32_t version = 1;
  Bytes value;  // one GF(256) y per secret byte

  bool operator==(const SecretShare&) const = default;
};

// Publicly broadcast hashes of every share of a version; lets a requester
// spot a wrong share immediately instead of searching subsets.
struct ShareDigestList {
  std::string file_id;
  std::uint32_t version = 1;
  std::map<std::uint32_t, crypto::Digest> digests;
};

// Splits key || scheme.salt into scheme.k shares with threshold scheme.n,
// Shamir over GF(256) applied bytewise with x coordinates 1..k.
std::vector<SecretShare> split(const crypto::SymmetricKey& key,
                               const std::string& file_id,
                               const ShareScheme& scheme, Rng& rng);

// Bytewise Shamir over an arbitrary secret; split/reconstruct are thin
// wrappers around these.
std::vector<SecretShare> split_bytes(ByteView secret,
                                     const std::string& file_id,
                                     std::uint32_t k, std::uint32_t n,
                                     std::uint32_t version, Rng& rng);
Bytes reconstruct_bytes(std::span<const SecretShare> shares, std::uint32_t n,
                        std::uint32_t version);

struct ReconstructedSecret {
  crypto::SymmetricKey key;
  Bytes salt;
};

// Lagrange interpolation at x = 0 from at least scheme.n shares.
// Throws InsufficientShares, VersionMismatch, DuplicateIndex.
ReconstructedSecret reconstruct(std::span<const SecretShare> shares,
                                const ShareScheme& scheme);

// Accepts exactly the keys that decrypt the file to its announced digest.
using KeyValidator = std::function<bool(const crypto::SymmetricKey&)>;

struct FaultTolerantResult {
  crypto::SymmetricKey key;
  Bytes salt;
  std::vector<std::uint32_t> bad_indices;  // shares off the recovered polynomial
};

// Searches size-n subsets of the responses in lexicographic index order until
// the validator accepts a reconstructed key; succeeds iff the number of wrong
// shares w satisfies w <= n' - n. Throws ReconstructionImpossible when no
// subset validates (without naming culprits - that takes a digest list).
FaultTolerantResult reconstruct_with_faults(std::span<const SecretShare> shares,
                                            const ShareScheme& scheme,
                                            const KeyValidator& validator);

// True iff hash(share.value) matches the broadcast digest for share.index.
// Throws MissingDigest when the list does not cover the index.
bool verify_against_digests(const SecretShare& share,
                            const ShareDigestList& digest_list);

// Random share values of the right shape for scheme.version; no subset
// reconstructs a key that decrypts anything. Distributing these under a
// fresh version revokes the file for everyone without a cached plaintext.
std::vector<SecretShare> make_pseudo_shares(const std::string& file_id,
                                            const ShareScheme& scheme,
                                            Rng& rng);

}  // namespace pool::sharing
