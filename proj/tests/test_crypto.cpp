#include <doctest.h>

#include <set>

#include "pool/crypto.hpp"
#include "pool/errors.hpp"
#include "pool/rng.hpp"

using namespace pool;
using namespace pool::crypto;

TEST_CASE("key generation is seed-deterministic") {
  Rng a(42);
  Rng b(42);
  const SymmetricKey ka = generate_key(a);
  const SymmetricKey kb = generate_key(b);
  CHECK(ka == kb);
  CHECK(ka.bytes.size() == 32);

  Rng c(1);
  Rng d(2);
  CHECK(generate_key(c) != generate_key(d));
}

TEST_CASE("10^4 generated keys are all distinct") {
  Rng rng(7);
  std::set<std::array<std::uint8_t, 32>> seen;
  for (int i = 0; i < 10000; ++i) {
    CHECK(seen.insert(generate_key(rng).bytes).second);
  }
}

TEST_CASE("encrypt/decrypt round trip") {
  Rng rng(3);
  const SymmetricKey key = generate_key(rng);

  SUBCASE("empty plaintext") {
    const Ciphertext ct = encrypt(key, {}, rng);
    CHECK(decrypt(key, ct).empty());
  }

  SUBCASE("1 MiB random plaintext") {
    const Bytes plaintext = rng.bytes(1 << 20);
    const Ciphertext ct = encrypt(key, plaintext, rng);
    CHECK(decrypt(key, ct) == plaintext);
  }

  SUBCASE("wrong key fails authentication") {
    const Bytes plaintext = rng.bytes(100);
    const Ciphertext ct = encrypt(key, plaintext, rng);
    const SymmetricKey other = generate_key(rng);
    CHECK_THROWS_AS(decrypt(other, ct), AuthenticationFailure);
  }
}

TEST_CASE("any single-bit corruption breaks authenticated decryption") {
  Rng rng(11);
  const SymmetricKey key = generate_key(rng);
  const Bytes plaintext = rng.bytes(64);
  const Ciphertext ct = encrypt(key, plaintext, rng);

  for (int trial = 0; trial < 50; ++trial) {
    Ciphertext corrupted = ct;
    const std::size_t byte = rng.below(corrupted.body.size());
    corrupted.body[byte] ^= static_cast<std::uint8_t>(1u << rng.below(8));
    CHECK_THROWS_AS(decrypt(key, corrupted), AuthenticationFailure);
  }
}

TEST_CASE("hash is deterministic, 32 bytes, 64 lowercase hex chars") {
  Rng rng(5);
  const Bytes data = rng.bytes(200);
  const Digest d1 = hash(data);
  const Digest d2 = hash(data);
  CHECK(d1 == d2);
  CHECK(d1.bytes.size() == 32);

  const std::string hex = d1.hex();
  CHECK(hex.size() == 64);
  for (char c : hex) {
    CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
  }
  CHECK(Digest::from_hex(hex) == d1);
}

TEST_CASE("appending a byte changes the digest") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    Bytes data = rng.bytes(1 + rng.below(100));
    const Digest before = hash(data);
    data.push_back(0x00);
    CHECK(hash(data) != before);
  }
}

TEST_CASE("sign/verify") {
  Rng rng(9);
  const NodeIdentity alice = NodeIdentity::generate("node-alice", rng);
  const NodeIdentity bob = NodeIdentity::generate("node-bob", rng);
  const Bytes data = rng.bytes(128);
  const Bytes signature = sign(alice, data);

  CHECK(verify(alice.signing.public_key, data, signature));
  CHECK_FALSE(verify(bob.signing.public_key, data, signature));

  Bytes mutated = data;
  mutated.push_back(0x01);
  CHECK_FALSE(verify(alice.signing.public_key, mutated, signature));

  Bytes short_sig(signature.begin(), signature.begin() + 10);
  CHECK_THROWS_AS(verify(alice.signing.public_key, data, short_sig),
                  VerificationError);
}

TEST_CASE("wrap_key/unwrap_key") {
  Rng rng(13);
  const NodeIdentity alice = NodeIdentity::generate("node-alice", rng);
  const NodeIdentity bob = NodeIdentity::generate("node-bob", rng);
  const NodeIdentity carol = NodeIdentity::generate("node-carol", rng);
  const SymmetricKey key = generate_key(rng);

  SUBCASE("round trip for the intended recipient") {
    const Bytes wrapped = wrap_key(bob.encryption.public_key, key, rng);
    CHECK(unwrap_key(bob.encryption, wrapped) == key);
  }

  SUBCASE("a different node's private key fails") {
    const Bytes wrapped = wrap_key(bob.encryption.public_key, key, rng);
    CHECK_THROWS_AS(unwrap_key(carol.encryption, wrapped), UnwrapFailure);
  }

  SUBCASE("three recipients get three distinct blobs, each opening") {
    const Bytes wa = wrap_key(alice.encryption.public_key, key, rng);
    const Bytes wb = wrap_key(bob.encryption.public_key, key, rng);
    const Bytes wc = wrap_key(carol.encryption.public_key, key, rng);
    CHECK(wa != wb);
    CHECK(wb != wc);
    CHECK(wa != wc);
    CHECK(unwrap_key(alice.encryption, wa) == key);
    CHECK(unwrap_key(bob.encryption, wb) == key);
    CHECK(unwrap_key(carol.encryption, wc) == key);
  }
}

TEST_CASE("identity generation is deterministic and id-distinct") {
  Rng a(21);
  Rng b(21);
  const NodeIdentity ia = NodeIdentity::generate("node-01", a);
  const NodeIdentity ib = NodeIdentity::generate("node-01", b);
  CHECK(ia.signing.public_key == ib.signing.public_key);
  CHECK(ia.encryption.public_key == ib.encryption.public_key);
  CHECK(derive_encryption_public(ia.encryption.secret_key) ==
        ia.encryption.public_key);
}
