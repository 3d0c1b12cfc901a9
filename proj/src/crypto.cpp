#include "pool/crypto.hpp"

#include <sodium.h>

#include <mutex>

#include "pool/errors.hpp"

namespace pool::crypto {

namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error("libsodium initialization failed");
  });
}

constexpr std::size_t kAeadNonce = crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;
constexpr std::size_t kAeadTag = crypto_aead_xchacha20poly1305_ietf_ABYTES;
constexpr std::size_t kBoxNonce = crypto_box_NONCEBYTES;

}  // namespace

std::string Digest::hex() const {
  return to_hex(bytes);
}

Digest Digest::from_hex(std::string_view hex) {
  const Bytes raw = pool::from_hex(hex);
  if (raw.size() != kDigestSize) throw ParseError("digest must be 32 bytes");
  Digest d;
  std::copy(raw.begin(), raw.end(), d.bytes.begin());
  return d;
}

Bytes Ciphertext::serialize() const {
  Bytes out;
  out.reserve(nonce.size() + body.size());
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Ciphertext Ciphertext::deserialize(ByteView data) {
  if (data.size() < kAeadNonce + kAeadTag) {
    throw ParseError("ciphertext too short");
  }
  Ciphertext ct;
  ct.nonce.assign(data.begin(), data.begin() + kAeadNonce);
  ct.body.assign(data.begin() + kAeadNonce, data.end());
  return ct;
}

void Directory::add(const NodeIdentity& identity) {
  nodes[identity.id] =
      PublicKeys{identity.signing.public_key, identity.encryption.public_key};
}

const PublicKeys& Directory::at(const std::string& id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw Error("unknown node id: " + id);
  return it->second;
}

NodeIdentity NodeIdentity::generate(std::string id, Rng& rng) {
  ensure_sodium();
  NodeIdentity out;
  out.id = std::move(id);

  const Bytes sign_seed = rng.bytes(crypto_sign_SEEDBYTES);
  out.signing.public_key.resize(crypto_sign_PUBLICKEYBYTES);
  out.signing.secret_key.resize(crypto_sign_SECRETKEYBYTES);
  crypto_sign_seed_keypair(out.signing.public_key.data(),
                           out.signing.secret_key.data(), sign_seed.data());

  const Bytes enc_seed = rng.bytes(crypto_box_SEEDBYTES);
  out.encryption.public_key.resize(crypto_box_PUBLICKEYBYTES);
  out.encryption.secret_key.resize(crypto_box_SECRETKEYBYTES);
  crypto_box_seed_keypair(out.encryption.public_key.data(),
                          out.encryption.secret_key.data(), enc_seed.data());
  return out;
}

SymmetricKey generate_key(Rng& rng) {
  SymmetricKey key;
  rng.fill(key.bytes);
  return key;
}

Ciphertext encrypt(const SymmetricKey& key, ByteView plaintext, Rng& rng) {
  ensure_sodium();
  Ciphertext ct;
  ct.nonce = rng.bytes(kAeadNonce);
  ct.body.resize(plaintext.size() + kAeadTag);
  unsigned long long written = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(
      ct.body.data(), &written, plaintext.data(), plaintext.size(), nullptr, 0,
      nullptr, ct.nonce.data(), key.bytes.data());
  ct.body.resize(written);
  return ct;
}

Bytes decrypt(const SymmetricKey& key, const Ciphertext& ct) {
  ensure_sodium();
  if (ct.nonce.size() != kAeadNonce || ct.body.size() < kAeadTag) {
    throw AuthenticationFailure("malformed ciphertext");
  }
  Bytes plaintext(ct.body.size() - kAeadTag);
  unsigned long long written = 0;
  if (crypto_aead_xchacha20poly1305_ietf_decrypt(
          plaintext.data(), &written, nullptr, ct.body.data(), ct.body.size(),
          nullptr, 0, ct.nonce.data(), key.bytes.data()) != 0) {
    throw AuthenticationFailure("decryption failed");
  }
  plaintext.resize(written);
  return plaintext;
}

Digest hash(ByteView data) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

Bytes sign(const NodeIdentity& signer, ByteView data) {
  ensure_sodium();
  Bytes signature(crypto_sign_BYTES);
  crypto_sign_detached(signature.data(), nullptr, data.data(), data.size(),
                       signer.signing.secret_key.data());
  return signature;
}

bool verify(ByteView sign_pk, ByteView data, ByteView signature) {
  ensure_sodium();
  if (signature.size() != crypto_sign_BYTES) {
    throw VerificationError("signature must be 64 bytes");
  }
  if (sign_pk.size() != crypto_sign_PUBLICKEYBYTES) {
    throw VerificationError("public signing key must be 32 bytes");
  }
  return crypto_sign_verify_detached(signature.data(), data.data(),
                                     data.size(), sign_pk.data()) == 0;
}

Bytes wrap_key(ByteView recipient_enc_pk, const SymmetricKey& key, Rng& rng) {
  ensure_sodium();
  if (recipient_enc_pk.size() != crypto_box_PUBLICKEYBYTES) {
    throw Error("recipient encryption key must be 32 bytes");
  }
  const Bytes seed = rng.bytes(crypto_box_SEEDBYTES);
  Bytes eph_pk(crypto_box_PUBLICKEYBYTES);
  Bytes eph_sk(crypto_box_SECRETKEYBYTES);
  crypto_box_seed_keypair(eph_pk.data(), eph_sk.data(), seed.data());

  const Bytes nonce = rng.bytes(kBoxNonce);
  Bytes boxed(key.bytes.size() + crypto_box_MACBYTES);
  if (crypto_box_easy(boxed.data(), key.bytes.data(), key.bytes.size(),
                      nonce.data(), recipient_enc_pk.data(),
                      eph_sk.data()) != 0) {
    throw Error("crypto_box failed");
  }

  Bytes out;
  out.reserve(eph_pk.size() + nonce.size() + boxed.size());
  out.insert(out.end(), eph_pk.begin(), eph_pk.end());
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), boxed.begin(), boxed.end());
  return out;
}

SymmetricKey unwrap_key(const KeyPair& recipient_enc, ByteView wrapped) {
  ensure_sodium();
  constexpr std::size_t kExpected = crypto_box_PUBLICKEYBYTES + kBoxNonce +
                                    kKeySize + crypto_box_MACBYTES;
  if (wrapped.size() != kExpected) {
    throw UnwrapFailure("wrapped key has wrong length");
  }
  const auto* eph_pk = wrapped.data();
  const auto* nonce = wrapped.data() + crypto_box_PUBLICKEYBYTES;
  const auto* boxed = nonce + kBoxNonce;
  const std::size_t boxed_len = kKeySize + crypto_box_MACBYTES;

  SymmetricKey key;
  if (crypto_box_open_easy(key.bytes.data(), boxed, boxed_len, nonce, eph_pk,
                           recipient_enc.secret_key.data()) != 0) {
    throw UnwrapFailure("wrapped key does not open under this private key");
  }
  return key;
}

Bytes derive_encryption_public(ByteView enc_sk) {
  ensure_sodium();
  if (enc_sk.size() != crypto_box_SECRETKEYBYTES) {
    throw Error("encryption secret key must be 32 bytes");
  }
  Bytes pk(crypto_box_PUBLICKEYBYTES);
  crypto_scalarmult_base(pk.data(), enc_sk.data());
  return pk;
}

}  // namespace pool::crypto
