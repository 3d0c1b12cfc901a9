#include "pool/secret_sharing.hpp"

#include <algorithm>
#include <set>

#include "pool/errors.hpp"
#include "pool/gf256.hpp"

namespace pool::sharing {

namespace {

// Secret layout: key bytes first, salt appended. Reconstruction splits at the
// key size; callers that only need the key ignore the salt.
Bytes secret_bytes(const crypto::SymmetricKey& key, const Bytes& salt) {
  Bytes secret(key.bytes.begin(), key.bytes.end());
  secret.insert(secret.end(), salt.begin(), salt.end());
  return secret;
}

ReconstructedSecret as_key_and_salt(const Bytes& secret) {
  if (secret.size() < crypto::kKeySize) {
    throw Error("reconstructed secret shorter than a key");
  }
  ReconstructedSecret out;
  std::copy_n(secret.begin(), crypto::kKeySize, out.key.bytes.begin());
  out.salt.assign(secret.begin() + crypto::kKeySize, secret.end());
  return out;
}

void check_share_set(std::span<const SecretShare> shares,
                     std::uint32_t version) {
  std::set<std::uint32_t> seen;
  for (const auto& share : shares) {
    if (share.version != version) {
      throw VersionMismatch("share version " + std::to_string(share.version) +
                            " vs expected version " + std::to_string(version));
    }
    if (share.file_id != shares.front().file_id) {
      throw VersionMismatch("shares from different files");
    }
    if (share.index == 0 || share.index > 255) {
      throw Error("share index out of range");
    }
    if (!seen.insert(share.index).second) {
      throw DuplicateIndex("index " + std::to_string(share.index));
    }
    if (share.value.size() != shares.front().value.size()) {
      throw Error("shares of unequal length");
    }
  }
}

Bytes interpolate_secret(std::span<const SecretShare> shares) {
  const std::size_t len = shares.front().value.size();
  Bytes secret(len);
  std::vector<gf256::Point> points(shares.size());
  for (std::size_t byte = 0; byte < len; ++byte) {
    for (std::size_t i = 0; i < shares.size(); ++i) {
      points[i] = {static_cast<std::uint8_t>(shares[i].index),
                   shares[i].value[byte]};
    }
    secret[byte] = gf256::interpolate_at_zero(points);
  }
  return secret;
}

}  // namespace

std::uint32_t derive_threshold(std::uint32_t k) {
  if (k == 0) throw InvalidPoolSize("pool must have at least one node");
  return (2 * k + 2) / 3;  // ⌈2k/3⌉
}

ShareScheme ShareScheme::derive(std::uint32_t k, std::uint32_t version,
                                Rng& rng) {
  ShareScheme scheme;
  scheme.k = k;
  scheme.n = derive_threshold(k);
  scheme.version = version;
  scheme.salt = rng.bytes(kSaltSize);
  return scheme;
}

std::vector<SecretShare> split_bytes(ByteView secret,
                                     const std::string& file_id,
                                     std::uint32_t k, std::uint32_t n,
                                     std::uint32_t version, Rng& rng) {
  if (k == 0 || n == 0 || n > k) throw InvalidPoolSize("invalid (n, k) scheme");
  if (k > 255) throw InvalidPoolSize("GF(256) supports at most 255 shares");

  std::vector<SecretShare> shares(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    shares[i].file_id = file_id;
    shares[i].index = i + 1;  // x = 0 would hand out the secret itself
    shares[i].version = version;
    shares[i].value.resize(secret.size());
  }

  std::vector<std::uint8_t> coeffs(n);
  for (std::size_t byte = 0; byte < secret.size(); ++byte) {
    coeffs[0] = secret[byte];
    for (std::uint32_t c = 1; c < n; ++c) coeffs[c] = rng.next_byte();
    for (std::uint32_t i = 0; i < k; ++i) {
      shares[i].value[byte] =
          gf256::eval_poly(coeffs, static_cast<std::uint8_t>(i + 1));
    }
  }
  return shares;
}

Bytes reconstruct_bytes(std::span<const SecretShare> shares, std::uint32_t n,
                        std::uint32_t version) {
  if (shares.size() < n) {
    throw InsufficientShares(std::to_string(shares.size()) + " of " +
                             std::to_string(n) + " required shares");
  }
  check_share_set(shares, version);
  // Interpolation degree is n-1; extra honest shares are redundant, so only
  // the first n are used.
  std::vector<SecretShare> subset(shares.begin(), shares.begin() + n);
  return interpolate_secret(subset);
}

std::vector<SecretShare> split(const crypto::SymmetricKey& key,
                               const std::string& file_id,
                               const ShareScheme& scheme, Rng& rng) {
  return split_bytes(secret_bytes(key, scheme.salt), file_id, scheme.k,
                     scheme.n, scheme.version, rng);
}

ReconstructedSecret reconstruct(std::span<const SecretShare> shares,
                                const ShareScheme& scheme) {
  return as_key_and_salt(reconstruct_bytes(shares, scheme.n, scheme.version));
}

FaultTolerantResult reconstruct_with_faults(
    std::span<const SecretShare> shares, const ShareScheme& scheme,
    const KeyValidator& validator) {
  if (shares.size() < scheme.n) {
    throw InsufficientShares(std::to_string(shares.size()) + " of " +
                             std::to_string(scheme.n) + " required shares");
  }
  check_share_set(shares, scheme.version);

  std::vector<SecretShare> sorted(shares.begin(), shares.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });

  const std::size_t n_total = sorted.size();
  const std::uint32_t n = scheme.n;

  // Walk size-n index subsets lexicographically until one validates.
  std::vector<std::size_t> pick(n);
  for (std::uint32_t i = 0; i < n; ++i) pick[i] = i;
  std::vector<SecretShare> subset(n);

  while (true) {
    for (std::uint32_t i = 0; i < n; ++i) subset[i] = sorted[pick[i]];
    const Bytes secret = interpolate_secret(subset);
    ReconstructedSecret candidate = as_key_and_salt(secret);
    if (validator(candidate.key)) {
      // The accepted subset pins the polynomial; every share off it is wrong.
      FaultTolerantResult result;
      result.key = candidate.key;
      result.salt = std::move(candidate.salt);
      std::vector<gf256::Point> points(n);
      for (const auto& share : sorted) {
        bool consistent = true;
        for (std::size_t byte = 0; byte < share.value.size() && consistent;
             ++byte) {
          for (std::uint32_t i = 0; i < n; ++i) {
            points[i] = {static_cast<std::uint8_t>(subset[i].index),
                         subset[i].value[byte]};
          }
          const std::uint8_t expected = gf256::interpolate_at(
              points, static_cast<std::uint8_t>(share.index));
          consistent = expected == share.value[byte];
        }
        if (!consistent) result.bad_indices.push_back(share.index);
      }
      return result;
    }

    // next combination
    bool advanced = false;
    for (std::size_t i = n; i-- > 0;) {
      if (pick[i] != i + n_total - n) {
        ++pick[i];
        for (std::size_t j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
        advanced = true;
        break;
      }
    }
    if (!advanced) {
      throw ReconstructionImpossible(
          "no subset of " + std::to_string(n) + " out of " +
          std::to_string(n_total) + " responses yields an accepted key");
    }
  }
}

bool verify_against_digests(const SecretShare& share,
                            const ShareDigestList& digest_list) {
  if (digest_list.file_id != share.file_id ||
      digest_list.version != share.version) {
    throw VersionMismatch("digest list is for a different file or version");
  }
  auto it = digest_list.digests.find(share.index);
  if (it == digest_list.digests.end()) {
    throw MissingDigest("index " + std::to_string(share.index));
  }
  return crypto::hash(share.value) == it->second;
}

std::vector<SecretShare> make_pseudo_shares(const std::string& file_id,
                                            const ShareScheme& scheme,
                                            Rng& rng) {
  // Uniform noise of the right shape. Any n-subset interpolates to a random
  // "secret" whose key part fails authenticated decryption.
  const std::size_t len = crypto::kKeySize + scheme.salt.size();
  std::vector<SecretShare> shares(scheme.k);
  for (std::uint32_t i = 0; i < scheme.k; ++i) {
    shares[i].file_id = file_id;
    shares[i].index = i + 1;
    shares[i].version = scheme.version;
    shares[i].value = rng.bytes(len);
  }
  return shares;
}

}  // namespace pool::sharing
