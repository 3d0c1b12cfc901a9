#include <doctest.h>

#include <algorithm>
#include <set>

#include "pool/block_store.hpp"
#include "pool/errors.hpp"
#include "pool/rng.hpp"

using namespace pool;
using namespace pool::store;

namespace {

std::vector<std::string> five_nodes() {
  return {"node-01", "node-02", "node-03", "node-04", "node-05"};
}

DhtNetwork make_network(std::size_t replication = 2,
                        std::size_t block_size = 1024) {
  DhtNetwork dht(replication, block_size);
  for (const auto& id : five_nodes()) dht.add_node(id, Behavior::Honest);
  return dht;
}

}  // namespace

TEST_CASE("chunk arithmetic") {
  Rng rng(1);

  SUBCASE("exact division") {
    const auto blocks = chunk(rng.bytes(4096), 1024);
    CHECK(blocks.size() == 4);
    for (const auto& b : blocks) CHECK(b.size() == 1024);
  }

  SUBCASE("remainder case") {
    const auto blocks = chunk(rng.bytes(4100), 1024);
    CHECK(blocks.size() == 5);
    CHECK(blocks.back().size() == 4);
  }

  SUBCASE("empty input") {
    CHECK_THROWS_AS(chunk({}, 1024), EmptyFile);
  }

  SUBCASE("chunk then concatenate round-trips") {
    for (int trial = 0; trial < 50; ++trial) {
      const Bytes data = rng.bytes(1 + rng.below(10 * 64));
      Bytes joined;
      for (const auto& b : chunk(data, 64)) {
        joined.insert(joined.end(), b.begin(), b.end());
      }
      CHECK(joined == data);
    }
  }
}

TEST_CASE("rendezvous placement") {
  const auto nodes = five_nodes();
  const BlockKey key{"file-a", 3};

  SUBCASE("cardinality and determinism") {
    const auto a = place(key, nodes, 2);
    const auto b = place(key, nodes, 2);
    CHECK(a.size() == 2);
    CHECK(a[0] != a[1]);
    CHECK(a == b);
  }

  SUBCASE("r larger than the pool") {
    CHECK_THROWS_AS(place(key, nodes, 6), InsufficientPeers);
  }

  SUBCASE("removing a non-replica node leaves the placement unchanged") {
    Rng rng(5);
    int stable = 0;
    int total = 0;
    for (int i = 0; i < 200; ++i) {
      const BlockKey k{"file-" + std::to_string(i), 0};
      const auto before = place(k, nodes, 2);
      for (const auto& removed : nodes) {
        if (std::find(before.begin(), before.end(), removed) != before.end()) {
          continue;  // only non-replica removals must be stable
        }
        std::vector<std::string> reduced;
        for (const auto& n : nodes) {
          if (n != removed) reduced.push_back(n);
        }
        ++total;
        if (place(k, reduced, 2) == before) ++stable;
      }
    }
    CHECK(stable == total);
  }
}

TEST_CASE("uploads are gated on announcements") {
  Rng rng(3);
  auto dht = make_network();

  const Bytes data = rng.bytes(1024);
  const crypto::Digest digest = crypto::hash(data);

  SUBCASE("junk for an unannounced file is dropped") {
    CHECK_FALSE(dht.put_block("node-05", BlockKey{"ghost", 0}, data, digest));
    CHECK(dht.stored_block_count() == 0);
    CHECK(dht.rejected_uploads("node-05") == 1);
  }

  SUBCASE("announced block is accepted and replicated") {
    dht.observe_announcement("file-a", 4);
    CHECK(dht.put_block("node-01", BlockKey{"file-a", 0}, data, digest));
    CHECK(dht.stored_block_count() == 2);  // replication factor
    CHECK(dht.audit_stores().empty());
  }

  SUBCASE("out-of-range index is dropped") {
    dht.observe_announcement("file-a", 4);
    CHECK_FALSE(dht.put_block("node-01", BlockKey{"file-a", 4}, data, digest));
  }

  SUBCASE("digest mismatch is dropped") {
    dht.observe_announcement("file-a", 4);
    const crypto::Digest wrong = crypto::hash(rng.bytes(8));
    CHECK_FALSE(dht.put_block("node-01", BlockKey{"file-a", 0}, data, wrong));
  }
}

TEST_CASE("get_block: local copy, replicas, corruption, silence") {
  Rng rng(9);
  auto dht = make_network();
  dht.observe_announcement("file-a", 1);
  const Bytes data = rng.bytes(512);
  const BlockKey key{"file-a", 0};
  REQUIRE(dht.put_block("node-01", key, data, crypto::hash(data)));
  const auto replicas = place(key, five_nodes(), 2);

  SUBCASE("replica answers a remote requester") {
    std::string requester = "node-01";
    for (const auto& id : five_nodes()) {
      if (std::find(replicas.begin(), replicas.end(), id) == replicas.end()) {
        requester = id;
        break;
      }
    }
    const auto result = dht.get_block(requester, key);
    REQUIRE(result.data.has_value());
    CHECK(*result.data == data);
    CHECK(result.provider == replicas[0]);
    CHECK_FALSE(result.served_locally);
  }

  SUBCASE("an accumulated local copy needs no network") {
    const auto result = dht.get_block(replicas[0], key);
    REQUIRE(result.data.has_value());
    CHECK(result.served_locally);
  }

  SUBCASE("corrupted replica is skipped and remembered, next one serves") {
    dht.tamper_block(replicas[0], key);
    const auto result = dht.get_block("node-xx", key);
    REQUIRE(result.data.has_value());
    CHECK(*result.data == data);
    CHECK(result.provider == replicas[1]);
    CHECK(dht.corrupt_providers().at(replicas[0]) == 1);
  }

  SUBCASE("silent replicas leave the block unavailable") {
    for (const auto& id : replicas) dht.add_node(id, Behavior::Silent);
    const auto result = dht.get_block("node-xx", key);
    CHECK_FALSE(result.data.has_value());
    CHECK(dht.unresponsive_replicas().size() == replicas.size());
  }
}

TEST_CASE("source fallback serves slices of the original") {
  Rng rng(21);
  DhtNetwork dht(2, 100);
  for (const auto& id : five_nodes()) dht.add_node(id, Behavior::Honest);
  const Bytes ciphertext = rng.bytes(250);
  dht.register_original("file-a", "node-01", ciphertext);

  auto slice0 = dht.source_block("file-a", 0);
  auto slice2 = dht.source_block("file-a", 2);
  REQUIRE(slice0.has_value());
  REQUIRE(slice2.has_value());
  CHECK(slice0->size() == 100);
  CHECK(slice2->size() == 50);
  CHECK(Bytes(ciphertext.begin(), ciphertext.begin() + 100) == *slice0);
  CHECK(dht.source_fallbacks() == 2);

  CHECK_FALSE(dht.source_block("file-a", 3).has_value());
  CHECK_FALSE(dht.source_block("nope", 0).has_value());

  SUBCASE("a silent source serves nothing") {
    dht.add_node("node-01", Behavior::Silent);
    CHECK_FALSE(dht.source_block("file-a", 0).has_value());
  }

  SUBCASE("a departed source serves nothing") {
    dht.remove_node("node-01");
    CHECK_FALSE(dht.source_block("file-a", 0).has_value());
  }
}
