// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/datastore.hpp"
#include "rollback_oracle.hpp"

#include <gtest/gtest.h>

namespace poe {
namespace {

class DatastoreTest : public ::testing::Test {
  protected:
    SignedTransaction put(std::uint64_t nonce, const std::string& key, std::uint8_t v) {
        return SignedTransaction::make(auth, 1, nonce, Command{OpKind::Put, key, Bytes{v}, {}}.encode());
    }
    SignedTransaction get(std::uint64_t nonce, const std::string& key) {
        return SignedTransaction::make(auth, 1, nonce, Command{OpKind::Get, key, {}, {}}.encode());
    }

    KeyedHashAuthenticator auth{4, 3, 1};
    Datastore store;
};

TEST_F(DatastoreTest, UndoRecordsPriorValues) {
    UndoRecord u0 = store.execute(Batch::make({put(0, "x", 5)}), 0, 0);
    UndoRecord u1 = store.execute(Batch::make({put(1, "x", 7)}), 1, 0);
    ASSERT_EQ(u0.prior_values.size(), 1u);
    EXPECT_EQ(u0.prior_values[0], std::make_pair(std::string("x"), std::optional<Bytes>{}));
    ASSERT_EQ(u1.prior_values.size(), 1u);
    EXPECT_EQ(u1.prior_values[0], std::make_pair(std::string("x"), std::optional<Bytes>(Bytes{5})));

    store.undo(u1);
    EXPECT_EQ(store.get("x"), Bytes{5});
    store.undo(u0);
    EXPECT_FALSE(store.get("x"));
    EXPECT_EQ(store.executed_count(), 0u);
}

TEST_F(DatastoreTest, GetDistinguishesAbsentFromEmpty) {
    std::vector<ExecutedRequest> out;
    store.execute(Batch::make({get(0, "x"), put(1, "x", 9), get(2, "x")}), 0, 0, &out);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].record->result, Bytes{0});
    EXPECT_EQ(out[2].record->result, (Bytes{1, 9}));
}

TEST_F(DatastoreTest, DuplicateRequestExecutesOnce) {
    auto t = put(0, "x", 1);
    store.execute(Batch::make({t}), 0, 0);
    store.execute(Batch::make({put(1, "x", 2)}), 1, 0);
    std::vector<ExecutedRequest> out;
    UndoRecord u = store.execute(Batch::make({t}), 2, 0, &out);
    EXPECT_TRUE(out.empty());
    EXPECT_TRUE(u.recorded.empty());
    EXPECT_EQ(store.get("x"), Bytes{2});
    EXPECT_EQ(store.find_executed(t.id())->seq, 0u);
}

TEST_F(DatastoreTest, SnapshotRestoresDigest) {
    store.execute(Batch::make({put(0, "a", 1), put(1, "b", 2)}), 0, 0);
    StateSnapshot s = store.snapshot();
    EXPECT_EQ(snapshot_digest(s), store.state_digest());

    Datastore other;
    other.restore(s);
    EXPECT_EQ(other.state_digest(), store.state_digest());
    EXPECT_EQ(other.kv(), store.kv());
}

TEST_F(DatastoreTest, ExecutedTableIsPartOfState) {
    Datastore a, b;
    a.execute(Batch::make({put(0, "x", 1)}), 0, 0);
    b.execute(Batch::make({put(7, "x", 1)}), 0, 0);
    EXPECT_EQ(a.kv(), b.kv());
    EXPECT_NE(a.state_digest(), b.state_digest());
}

TEST_F(DatastoreTest, UndecodablePayloadIsANoOp) {
    auto junk = SignedTransaction::make(auth, 1, 0, Bytes{0xff, 0xff});
    std::vector<ExecutedRequest> out;
    store.execute(Batch::make({junk}), 0, 0, &out);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_TRUE(store.kv().empty());
}

TEST(RollbackOracle, RandomSchedulesMatchReplay) {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        auto r = testing::run_rollback_schedule(seed);
        ASSERT_TRUE(r.after_rollback) << "seed " << seed;
        ASSERT_TRUE(r.after_reexecute) << "seed " << seed;
    }
}

} // namespace
} // namespace poe
