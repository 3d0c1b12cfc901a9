#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "pool/bytes.hpp"
#include "pool/rng.hpp"

namespace pool::crypto {

inline constexpr std::size_t kKeySize = 32;
inline constexpr std::size_t kDigestSize = 32;

// Secret symmetric key, one per file.
struct SymmetricKey {
  std::array<std::uint8_t, kKeySize> bytes{};

  auto operator<=>(const SymmetricKey&) const = default;
};

struct Digest {
  std::array<std::uint8_t, kDigestSize> bytes{};

  std::string hex() const;  // 64 lowercase hex chars, no prefix
  static Digest from_hex(std::string_view hex);

  auto operator<=>(const Digest&) const = default;
};

// Authenticated ciphertext; the Poly1305 tag is embedded at the end of body.
struct Ciphertext {
  Bytes nonce;
  Bytes body;

  Bytes serialize() const;  // nonce || body
  static Ciphertext deserialize(ByteView data);

  bool operator==(const Ciphertext&) const = default;
};

struct KeyPair {
  Bytes public_key;
  Bytes secret_key;
};

// A pool member. The id is an opaque endpoint name, deliberately distinct
// from any key material so keys can be rotated without renaming the node.
struct NodeIdentity {
  std::string id;
  KeyPair signing;     // Ed25519
  KeyPair encryption;  // X25519

  static NodeIdentity generate(std::string id, Rng& rng);
};

struct PublicKeys {
  Bytes sign_pk;
  Bytes enc_pk;

  bool operator==(const PublicKeys&) const = default;
};

// Public half of every identity ever admitted to the pool.
struct Directory {
  std::map<std::string, PublicKeys> nodes;

  void add(const NodeIdentity& identity);
  const PublicKeys& at(const std::string& id) const;  // throws Error
  bool contains(const std::string& id) const { return nodes.count(id) != 0; }
};

SymmetricKey generate_key(Rng& rng);

Ciphertext encrypt(const SymmetricKey& key, ByteView plaintext, Rng& rng);
// Throws AuthenticationFailure on wrong key or any ciphertext corruption.
Bytes decrypt(const SymmetricKey& key, const Ciphertext& ct);

Digest hash(ByteView data);

Bytes sign(const NodeIdentity& signer, ByteView data);
// True iff signature matches (data, signer). Throws VerificationError only
// for structurally malformed inputs (wrong signature or key length).
bool verify(ByteView sign_pk, ByteView data, ByteView signature);

// Wraps the symmetric key for one recipient: ephemeral X25519 keypair and
// nonce are drawn from rng, output is eph_pk || nonce || box.
Bytes wrap_key(ByteView recipient_enc_pk, const SymmetricKey& key, Rng& rng);
// Throws UnwrapFailure when the private key does not match.
SymmetricKey unwrap_key(const KeyPair& recipient_enc, ByteView wrapped);

// X25519 public key for a secret key; used when checking disclosed evidence.
Bytes derive_encryption_public(ByteView enc_sk);

}  // namespace pool::crypto
