// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cluster.hpp"
#include "rollback_oracle.hpp"

#include <gtest/gtest.h>

namespace poe {
namespace {

using testing::as;
using testing::Cluster;
using testing::Packet;

std::size_t count_queued(const Cluster& c, const std::function<bool(const Packet&)>& pred) {
    std::size_t k = 0;
    for (const auto& p : c.queue) k += pred(p) ? 1 : 0;
    return k;
}

TEST(Primary, ProposesFirstRequestAtSeqZero) {
    Cluster c;
    c.request(0, c.txn(1, 0, "x", 1));
    ASSERT_EQ(c.queue.size(), 3u);
    for (const auto& p : c.queue) {
        const auto* m = as<ProposeMsg>(p);
        ASSERT_TRUE(m);
        EXPECT_EQ(m->view, 0u);
        EXPECT_EQ(m->seq, 0u);
    }
}

TEST(Primary, DoesNotWaitForConsensusBetweenProposals) {
    Cluster c;
    for (std::uint64_t i = 0; i < 3; ++i) c.request(0, c.txn(1, i, "x", 1));
    std::set<SeqNum> seqs;
    for (const auto& p : c.queue) {
        if (const auto* m = as<ProposeMsg>(p)) seqs.insert(m->seq);
    }
    EXPECT_EQ(seqs, (std::set<SeqNum>{0, 1, 2}));
}

TEST(Primary, WindowOfOneIsSequential) {
    Cluster c(4, 1, Scheme::TS, [](ReplicaConfig& cfg) { cfg.max_in_flight = 1; });
    for (std::uint64_t i = 0; i < 3; ++i) c.request(0, c.txn(1, i, "x", 1));
    EXPECT_EQ(count_queued(c, [](const Packet& p) { return as<ProposeMsg>(p) != nullptr; }), 3u);
    c.run();
    EXPECT_EQ(c[0].applied_count(), 3u);
    for (ReplicaId r = 0; r < 4; ++r) EXPECT_EQ(c[r].applied_count(), 3u);
}

TEST(Primary, DuplicateAfterExecutionResendsInform) {
    Cluster c;
    auto t = c.txn(1, 0, "x", 1);
    c.request(0, t);
    c.run();
    ASSERT_EQ(c[0].applied_count(), 1u);
    std::size_t informs = c.to_clients.size();
    c.request(0, t);
    EXPECT_EQ(c.to_clients.size(), informs + 1);
    EXPECT_TRUE(as<InformMsg>(c.to_clients.back()));
    EXPECT_EQ(c[0].next_seq(), 1u);
}

TEST(Primary, BatchesUpToBatchSize) {
    Cluster c(4, 1, Scheme::TS, [](ReplicaConfig& cfg) { cfg.batch_size = 3; });
    for (std::uint64_t i = 0; i < 3; ++i) c.request(0, c.txn(1, i, "k" + std::to_string(i), 1));
    ASSERT_EQ(c.queue.size(), 3u);
    EXPECT_EQ(as<ProposeMsg>(c.queue.front())->batch.requests.size(), 3u);
}

TEST(Backup, SupportsFirstProposalOnlyToPrimary) {
    Cluster c;
    c.request(0, c.txn(1, 0, "x", 1));
    Packet to_r1 = c.queue[0];
    ASSERT_EQ(to_r1.to, NodeId::replica(1));
    c.queue.clear();
    c.inject(NodeId::replica(0), 1, *to_r1.msg);
    c.run(1);
    ASSERT_EQ(c.queue.size(), 1u);
    EXPECT_EQ(c.queue[0].to, NodeId::replica(0));
    EXPECT_TRUE(as<SupportMsg>(c.queue[0]));
}

TEST(Backup, SecondProposalForSameSlotIgnored) {
    Cluster c;
    c.request(0, c.txn(1, 0, "x", 1));
    Packet first = c.queue[0];
    c.queue.clear();
    c.inject(NodeId::replica(0), 1, *first.msg);
    c.run(1);
    c.queue.clear();
    ProposeMsg other = *as<ProposeMsg>(first);
    other.batch = Batch::make({c.txn(2, 0, "y", 2)});
    c.inject(NodeId::replica(0), 1, other);
    c.run(1);
    EXPECT_TRUE(c.queue.empty());
}

TEST(Backup, ProposalFromNonPrimaryIgnored) {
    Cluster c;
    c.inject(NodeId::replica(2), 1, ProposeMsg{0, 0, Batch::make({c.txn(1, 0, "x", 1)})});
    c.run();
    EXPECT_TRUE(c.log.empty());
    EXPECT_EQ(c[1].entry(0), nullptr);
}

TEST(Backup, ProposalWithBadClientSignatureIgnored) {
    Cluster c;
    auto t = c.txn(1, 0, "x", 1);
    t.sig.tag.bytes[0] ^= 1;
    c.inject(NodeId::replica(0), 1, ProposeMsg{0, 0, Batch::make({t})});
    c.run();
    EXPECT_TRUE(c.log.empty());
}

TEST(Backup, ProposalBeyondWatermarkIsHeld) {
    Cluster c(4, 1, Scheme::TS, [](ReplicaConfig& cfg) { cfg.watermark_window = 4; });
    c.inject(NodeId::replica(0), 1, ProposeMsg{0, 4, Batch::make({c.txn(1, 0, "x", 1)})});
    c.run();
    EXPECT_TRUE(c.log.empty());
}

class CertifyTest : public ::testing::Test {
  protected:
    // Primary r0 has proposed seq 0; the returned supports are undelivered.
    void SetUp() override {
        c.request(0, c.txn(1, 0, "x", 1));
        proposals = {c.queue.begin(), c.queue.end()};
        c.queue.clear();
        for (const auto& p : proposals) {
            c.inject(NodeId::replica(0), p.to.index, *p.msg);
            c.run(1);
            supports.insert(supports.end(), c.queue.begin(), c.queue.end());
            c.queue.clear();
        }
        ASSERT_EQ(supports.size(), 3u);
    }
    std::size_t certifies() const {
        return c.sent([](const Packet& p) { return p.from == NodeId::replica(0) && as<CertifyMsg>(p); });
    }
    void deliver_support(std::size_t i) {
        c.inject(supports[i].from, 0, *supports[i].msg);
        c.run(1);
    }

    Cluster c;
    std::vector<Packet> proposals;
    std::vector<Packet> supports;
};

TEST_F(CertifyTest, PrimaryNeedsTwoBackupShares) {
    deliver_support(0);
    EXPECT_EQ(certifies(), 0u);
    deliver_support(1);
    // Broadcast to every replica, the primary included.
    EXPECT_EQ(certifies(), 4u);
}

TEST_F(CertifyTest, RepeatedShareCountsOnce) {
    deliver_support(0);
    deliver_support(0);
    EXPECT_EQ(certifies(), 0u);
}

TEST_F(CertifyTest, CertifyIsSentOnce) {
    deliver_support(0);
    deliver_support(1);
    deliver_support(2);
    EXPECT_EQ(certifies(), 4u);
}

TEST_F(CertifyTest, CertifyViewCommitsEverywhere) {
    deliver_support(0);
    deliver_support(1);
    c.run();
    for (ReplicaId r = 0; r < 4; ++r) {
        ASSERT_EQ(c.transitions_of(r, Transition::Kind::ViewCommit).size(), 1u) << r;
        EXPECT_EQ(c[r].applied_count(), 1u);
    }
    // One inform per replica.
    EXPECT_EQ(c.to_clients.size(), 4u);
}

TEST_F(CertifyTest, SharesForOtherDigestIgnored) {
    SupportMsg bad = *as<SupportMsg>(supports[0]);
    bad.share = c.auth.sign_share(1, hash("other"));
    c.inject(NodeId::replica(1), 0, bad);
    c.run(1);
    deliver_support(1);
    EXPECT_EQ(certifies(), 0u);
}

TEST_F(CertifyTest, UnderThresholdCertifyRejected) {
    Digest h = c[1].entry(0)->certify_digest;
    // Two shares plus a threshold signature claiming them is not a certificate.
    KeyedHashAuthenticator weak(4, 2, 7);
    std::vector<SignatureShare> two{c.auth.sign_share(0, h), c.auth.sign_share(2, h)};
    ThresholdSignature ts = weak.aggregate(two);
    c.inject(NodeId::replica(0), 1, CertifyMsg{0, 0, ts});
    c.run(1);
    EXPECT_TRUE(c.transitions_of(1, Transition::Kind::ViewCommit).empty());
}

TEST_F(CertifyTest, CertifyForUnknownSlotIgnored) {
    Digest h = certify_digest(5, 0, hash("never proposed"));
    std::vector<SignatureShare> shares{c.auth.sign_share(0, h), c.auth.sign_share(2, h), c.auth.sign_share(3, h)};
    c.inject(NodeId::replica(0), 1, CertifyMsg{0, 5, c.auth.aggregate(shares)});
    c.run(1);
    EXPECT_TRUE(c.transitions_of(1, Transition::Kind::ViewCommit).empty());
}

TEST(Execution, WaitsForGapThenSweeps) {
    Cluster c;
    for (std::uint64_t i = 0; i < 3; ++i) c.request(0, c.txn(1, i, "x", static_cast<std::uint8_t>(i)));
    // Hold every message about seq 1 until seq 2 has view-committed.
    std::vector<Packet> held;
    c.drop = [&](const Packet& p) {
        const auto* pr = as<ProposeMsg>(p);
        const auto* su = as<SupportMsg>(p);
        const auto* ce = as<CertifyMsg>(p);
        SeqNum k = pr ? pr->seq : su ? su->seq : ce ? ce->seq : 99;
        if (k == 1) held.push_back(p);
        return k == 1;
    };
    c.run();
    for (ReplicaId r = 0; r < 4; ++r) {
        EXPECT_EQ(c[r].applied_count(), 1u);
        ASSERT_TRUE(c[r].entry(2));
        EXPECT_EQ(c[r].entry(2)->status, EntryStatus::ViewCommitted);
    }
    c.drop = {};
    for (const auto& p : held) c.queue.push_back(p);
    c.run();
    for (ReplicaId r = 0; r < 4; ++r) {
        EXPECT_EQ(c[r].applied_count(), 3u);
        auto execs = c.transitions_of(r, Transition::Kind::Execute);
        ASSERT_EQ(execs.size(), 3u);
        for (SeqNum k = 0; k < 3; ++k) EXPECT_EQ(execs[k].seq, k);
    }
    EXPECT_EQ(c[2].store().get("x"), Bytes{2});
}

TEST(Execution, RollbackMatchesReplay) {
    Cluster c;
    std::vector<Batch> batches;
    for (std::uint64_t i = 0; i < 4; ++i) c.request(0, c.txn(1, i, i % 2 ? "x" : "y", static_cast<std::uint8_t>(i)));
    c.run();
    ASSERT_EQ(c[2].applied_count(), 4u);
    for (SeqNum k = 0; k < 4; ++k) batches.push_back(*c[2].entry(k)->batch);

    Effects fx;
    c[2].rollback(3, fx); // already there: no-op
    EXPECT_TRUE(fx.transitions.empty());
    c[2].rollback(1, fx);
    EXPECT_EQ(c[2].applied_count(), 2u);
    EXPECT_EQ(c[2].ledger().size(), 2u);
    batches.resize(2);
    EXPECT_EQ(c[2].store().kv(), testing::replay(batches));
    ASSERT_EQ(fx.transitions.size(), 1u);
    EXPECT_EQ(fx.transitions[0].kind, Transition::Kind::Rollback);
    EXPECT_EQ(fx.transitions[0].entries.size(), 2u);
    EXPECT_EQ(fx.transitions[0].entries.front().seq, 3u); // newest first
}

TEST(Forwarding, BackupForwardsClientRequestAndArmsTimer) {
    Cluster c;
    auto t = c.txn(1, 0, "x", 1);
    c.request(2, t);
    ASSERT_EQ(c.queue.size(), 1u);
    EXPECT_EQ(c.queue[0].to, NodeId::replica(0));
    EXPECT_TRUE(as<RequestMsg>(c.queue[0]));
    EXPECT_EQ(c.timers[2].size(), 1u);
    EXPECT_EQ(c[2].pending_requests(), 1u);
    c.run();
    EXPECT_EQ(c[2].pending_requests(), 0u);
}

TEST(Forwarding, BadSignatureDropped) {
    Cluster c;
    auto t = c.txn(1, 0, "x", 1);
    t.payload.push_back(0);
    c.request(2, t);
    c.request(0, t);
    EXPECT_TRUE(c.log.empty());
    EXPECT_EQ(c[2].pending_requests(), 0u);
}

TEST(Forwarding, ExpiredRequestTimerStartsViewChange) {
    Cluster c;
    c.drop = [](const Packet& p) { return p.to == NodeId::replica(0); };
    c.request(2, c.txn(1, 0, "x", 1));
    c.run();
    c.fire_timers(2);
    auto vcs = c.transitions_of(2, Transition::Kind::VcRequest);
    ASSERT_EQ(vcs.size(), 1u);
    EXPECT_EQ(vcs[0].view, 0u);
    EXPECT_NE(c[2].phase(), Phase::Active);
}

TEST(Mac, ViewCommitsOnMatchingSupports) {
    Cluster c(4, 1, Scheme::MAC);
    c.request(0, c.txn(1, 0, "x", 1));
    c.run();
    EXPECT_EQ(c.sent([](const Packet& p) { return as<CertifyMsg>(p) != nullptr; }), 0u);
    for (ReplicaId r = 0; r < 4; ++r) {
        EXPECT_EQ(c[r].applied_count(), 1u);
        ASSERT_TRUE(c[r].entry(0)->certify);
        EXPECT_TRUE(c.auth.verify_threshold(c[r].entry(0)->certify->ts, c[r].entry(0)->certify_digest));
    }
}

TEST(Mac, TwoSupportsAreNotEnough) {
    Cluster c(4, 1, Scheme::MAC);
    c.request(0, c.txn(1, 0, "x", 1));
    c.drop = [](const Packet& p) {
        return (p.from == NodeId::replica(3) || p.to == NodeId::replica(3)) ||
               (as<SupportMsg>(p) && p.from == NodeId::replica(2));
    };
    c.run();
    for (ReplicaId r = 0; r < 2; ++r) EXPECT_EQ(c[r].applied_count(), 0u) << r;
}

TEST(Digests, BackupRecomputesCertifiedDigest) {
    Cluster c;
    c.request(0, c.txn(1, 0, "x", 1));
    c.run();
    const LogEntry* primary = c[0].entry(0);
    for (ReplicaId r = 1; r < 4; ++r) {
        const LogEntry* e = c[r].entry(0);
        EXPECT_EQ(e->certify_digest, certify_digest(0, 0, e->batch->digest));
        EXPECT_EQ(e->certify_digest, primary->certify_digest);
    }
}

} // namespace
} // namespace poe
