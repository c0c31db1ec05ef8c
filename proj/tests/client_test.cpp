// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cluster.hpp"

#include <gtest/gtest.h>

namespace poe {
namespace {

class ClientTest : public ::testing::Test {
  protected:
    InformMsg inform_for(const SignedTransaction& t, Bytes result = {'O', 'K'}) {
        return InformMsg{0, 3, t.digest(), hash("batch"), std::move(result)};
    }

    KeyedHashAuthenticator auth{4, 3, 7};
    Client client{ClientConfig{5, 4, 1, 30}, auth};
    Effects fx;
};

TEST_F(ClientTest, NoncesAreFreshAndSigned) {
    auto a = client.submit(Bytes{1}, fx);
    auto b = client.submit(Bytes{1}, fx);
    EXPECT_EQ(a.nonce, 0u);
    EXPECT_EQ(b.nonce, 1u);
    EXPECT_TRUE(a.verify(auth));
    EXPECT_NE(a.digest(), b.digest());
    ASSERT_EQ(fx.sends.size(), 2u);
    EXPECT_EQ(fx.sends[0].to, NodeId::replica(0));
}

TEST_F(ClientTest, CommitsOnQuorumOfMatchingInforms) {
    auto t = client.submit(Bytes{1}, fx);
    EXPECT_FALSE(client.on_inform(0, inform_for(t), fx));
    EXPECT_FALSE(client.on_inform(1, inform_for(t), fx));
    auto ev = client.on_inform(2, inform_for(t), fx);
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->seq, 3u);
    EXPECT_EQ(ev->nonce, t.nonce);
    EXPECT_EQ(client.pending(), 0u);
    EXPECT_FALSE(client.on_inform(3, inform_for(t), fx)); // already committed
    EXPECT_EQ(client.committed(), 1u);
}

TEST_F(ClientTest, DifferingResultBlocksCommit) {
    auto t = client.submit(Bytes{1}, fx);
    client.on_inform(0, inform_for(t), fx);
    client.on_inform(1, inform_for(t), fx);
    EXPECT_FALSE(client.on_inform(2, inform_for(t, {'N', 'O'}), fx));
    EXPECT_TRUE(client.on_inform(3, inform_for(t), fx));
}

TEST_F(ClientTest, DuplicateInformCountedOnce) {
    auto t = client.submit(Bytes{1}, fx);
    client.on_inform(1, inform_for(t), fx);
    client.on_inform(1, inform_for(t), fx);
    EXPECT_FALSE(client.on_inform(1, inform_for(t), fx));
    EXPECT_EQ(client.pending(), 1u);
}

TEST_F(ClientTest, UnknownOrForeignInformIgnored) {
    auto t = client.submit(Bytes{1}, fx);
    InformMsg other = inform_for(t);
    other.txn_digest = hash("someone else");
    for (ReplicaId r = 0; r < 4; ++r) EXPECT_FALSE(client.on_inform(r, other, fx));
    EXPECT_FALSE(client.on_inform(9, inform_for(t), fx));
}

TEST_F(ClientTest, TimeoutBroadcastsToAllReplicas) {
    client.submit(Bytes{1}, fx);
    ASSERT_EQ(fx.timers.size(), 1u);
    TimerRequest first = fx.timers[0];
    EXPECT_EQ(first.delay, 30);
    fx.clear();
    client.on_timer(first.id, fx);
    ASSERT_EQ(fx.sends.size(), 4u);
    for (ReplicaId r = 0; r < 4; ++r) EXPECT_EQ(fx.sends[r].to, NodeId::replica(r));
    ASSERT_EQ(fx.timers.size(), 1u);
    EXPECT_EQ(fx.timers[0].delay, 60);
    fx.clear();
    client.on_timer(first.id, fx); // already fired
    EXPECT_TRUE(fx.sends.empty());
}

TEST_F(ClientTest, CommitCancelsTimer) {
    auto t = client.submit(Bytes{1}, fx);
    TimerId id = fx.timers[0].id;
    for (ReplicaId r = 0; r < 3; ++r) client.on_inform(r, inform_for(t), fx);
    fx.clear();
    client.on_timer(id, fx);
    EXPECT_TRUE(fx.sends.empty());
    EXPECT_TRUE(fx.timers.empty());
}

TEST_F(ClientTest, LearnsNewViewFromCommit) {
    auto t = client.submit(Bytes{1}, fx);
    InformMsg m = inform_for(t);
    m.view = 6;
    for (ReplicaId r = 0; r < 3; ++r) client.on_inform(r, m, fx);
    EXPECT_EQ(client.believed_primary(), 2u);
}

TEST(ClientConfigCheck, RejectsSmallGroups) {
    KeyedHashAuthenticator auth(3, 2, 1);
    EXPECT_THROW(Client(ClientConfig{0, 3, 1}, auth), ConfigInvalid);
}

// End to end: the client's signature verifies at the replicas and the
// request commits with nf informs.
TEST(ClientEndToEnd, CommitsThroughCluster) {
    testing::Cluster c;
    Client client(ClientConfig{1, 4, 1}, c.auth);
    Effects fx;
    auto t = client.submit(Command{OpKind::Put, "x", Bytes{4}, {}}.encode(), fx);
    c.request(0, t);
    c.run();
    std::optional<CommitEvent> ev;
    for (const auto& p : c.to_clients) {
        if (auto got = client.on_inform(p.from.index, *testing::as<InformMsg>(p), fx)) ev = got;
    }
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->seq, 0u);
    EXPECT_EQ(ev->result, (Bytes{'O', 'K'}));
}

} // namespace
} // namespace poe
