// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cluster.hpp"
#include "poe/checkpoint.hpp"

#include <gtest/gtest.h>

namespace poe {
namespace {

using testing::as;
using testing::Cluster;
using testing::Packet;

auto interval(std::size_t c) {
    return [c](ReplicaConfig& cfg) { cfg.checkpoint_interval = c; };
}

void submit(Cluster& c, std::uint64_t from, std::uint64_t to) {
    for (std::uint64_t i = from; i < to; ++i) {
        c.request(0, c.txn(1, i, "k" + std::to_string(i % 3), static_cast<std::uint8_t>(i)));
    }
}

bool normal_case(const Packet& p) { return as<ProposeMsg>(p) || as<SupportMsg>(p) || as<CertifyMsg>(p); }

TEST(Checkpoint, SequenceRule) {
    EXPECT_FALSE(is_checkpoint_seq(0, 10));
    EXPECT_FALSE(is_checkpoint_seq(9, 10));
    EXPECT_TRUE(is_checkpoint_seq(10, 10));
    EXPECT_TRUE(is_checkpoint_seq(20, 10));
}

TEST(Checkpoint, EmittedAfterCheckpointSeq) {
    Cluster c(4, 1, Scheme::TS, interval(4));
    c.drop = [](const Packet& p) { return as<CheckpointMsg>(p) != nullptr; };
    submit(c, 0, 4); // seqs 0..3
    c.run();
    EXPECT_EQ(c.sent([](const Packet& p) { return as<CheckpointMsg>(p) != nullptr; }), 0u);
    submit(c, 4, 5); // seq 4
    c.run();
    for (ReplicaId r = 0; r < 4; ++r) {
        EXPECT_EQ(c.sent([r](const Packet& p) { return p.from == NodeId::replica(r) && as<CheckpointMsg>(p); }), 3u);
    }
}

TEST(Checkpoint, DigestsDifferAcrossCheckpoints) {
    Cluster c(4, 1, Scheme::TS, interval(4));
    submit(c, 0, 9);
    c.run();
    std::map<SeqNum, Digest> by_seq;
    for (const auto& p : c.log) {
        const auto* m = as<CheckpointMsg>(p);
        if (m && p.from == NodeId::replica(1)) by_seq[m->seq] = m->state_digest;
    }
    ASSERT_EQ(by_seq.size(), 2u);
    EXPECT_NE(by_seq.at(4), by_seq.at(8));
}

TEST(Checkpoint, StableOnQuorumAndGarbageCollects) {
    Cluster c(4, 1, Scheme::TS, interval(4));
    submit(c, 0, 6);
    c.run();
    for (ReplicaId r = 0; r < 4; ++r) {
        EXPECT_EQ(c[r].stable_count(), 5u);
        ASSERT_TRUE(c[r].stable_certificate());
        EXPECT_EQ(c[r].stable_certificate()->seq, 4u);
        EXPECT_EQ(c[r].log().begin()->first, 5u);
        EXPECT_EQ(c.transitions_of(r, Transition::Kind::StableCheckpoint).size(), 1u);
    }
}

TEST(Checkpoint, MismatchedVoteBlocksQuorum) {
    Cluster c(4, 1, Scheme::TS, interval(4));
    // r0 hears only r1's vote besides its own.
    c.drop = [](const Packet& p) {
        return as<CheckpointMsg>(p) && !(p.from == NodeId::replica(1) && p.to == NodeId::replica(0));
    };
    submit(c, 0, 5);
    c.run();
    ASSERT_EQ(c[0].applied_count(), 5u);
    c.drop = {};
    c.inject(NodeId::replica(3), 0, make_checkpoint(4, hash("wrong"), c[0].ledger().head(), 3, c.auth));
    c.run();
    EXPECT_EQ(c[0].stable_count(), 0u);
    c.inject(NodeId::replica(2), 0,
             make_checkpoint(4, c[2].store().state_digest(), c[2].ledger().head(), 2, c.auth));
    c.run();
    EXPECT_EQ(c[0].stable_count(), 5u);
}

TEST(Checkpoint, CertificateValidation) {
    KeyedHashAuthenticator auth(4, 3, 7);
    ReplicaConfig cfg;
    Digest s = hash("state"), l = hash("ledger");
    std::map<ReplicaId, CheckpointMsg> votes;
    for (ReplicaId r = 0; r < 2; ++r) votes[r] = make_checkpoint(8, s, l, r, auth);
    EXPECT_FALSE(try_certify(8, votes, 3));
    votes[3] = make_checkpoint(8, hash("other"), l, 3, auth);
    EXPECT_FALSE(try_certify(8, votes, 3));
    votes[2] = make_checkpoint(8, s, l, 2, auth);
    auto cert = try_certify(8, votes, 3);
    ASSERT_TRUE(cert);
    EXPECT_EQ(cert->state_digest, s);
    EXPECT_TRUE(validate_certificate(*cert, cfg, auth));

    CheckpointCertificate forged = *cert;
    forged.votes[1].sig.tag.bytes[0] ^= 1;
    EXPECT_FALSE(validate_certificate(forged, cfg, auth));
    CheckpointCertificate dup = *cert;
    dup.votes[1] = dup.votes[0];
    EXPECT_FALSE(validate_certificate(dup, cfg, auth));
    CheckpointCertificate moved = *cert;
    moved.seq = 12;
    EXPECT_FALSE(validate_certificate(moved, cfg, auth));
}

// r3 gets the certify for checkpoint seq 4 before the proposal. Accepting the
// proposal executes 4 and makes the checkpoint stable, which collects the
// entry the proposal just created.
TEST(Checkpoint, EarlyCertifyAtCheckpointSeq) {
    Cluster c(4, 1, Scheme::TS, interval(4));
    std::vector<Packet> held;
    c.drop = [&held](const Packet& p) {
        const auto* pr = as<ProposeMsg>(p);
        if (p.to == NodeId::replica(3) && pr && pr->seq == 4) {
            held.push_back(p);
            return true;
        }
        // With only two votes from peers, r3's own vote completes the quorum.
        return p.to == NodeId::replica(3) && p.from == NodeId::replica(2) && as<CheckpointMsg>(p);
    };
    submit(c, 0, 5);
    c.run();
    ASSERT_EQ(held.size(), 1u);
    ASSERT_EQ(c[3].applied_count(), 4u);
    ASSERT_FALSE(c[3].awaiting_state());
    c.drop = [](const Packet& p) {
        return p.to == NodeId::replica(3) && p.from == NodeId::replica(2) && as<CheckpointMsg>(p);
    };
    c.inject(held[0].from, 3, *as<ProposeMsg>(held[0]));
    c.run();
    EXPECT_EQ(c[3].applied_count(), 5u);
    EXPECT_EQ(c[3].stable_count(), 5u);
    EXPECT_EQ(c[3].store().state_digest(), c[0].store().state_digest());
}

// A replica kept out of the normal case catches up from a stable checkpoint.
TEST(StateTransfer, DarkReplicaCatchesUp) {
    Cluster c(4, 1, Scheme::TS, interval(4));
    c.drop = [](const Packet& p) { return p.to == NodeId::replica(3) && normal_case(p); };
    submit(c, 0, 5);
    c.run();
    ASSERT_EQ(c[0].stable_count(), 5u);
    EXPECT_EQ(c[3].applied_count(), 5u);
    EXPECT_EQ(c[3].stable_count(), 5u);
    EXPECT_EQ(c[3].store().state_digest(), c[0].store().state_digest());
    EXPECT_EQ(c[3].ledger().head(), c[0].ledger().head());
    EXPECT_EQ(c.transitions_of(3, Transition::Kind::Install).size(), 1u);
    EXPECT_GT(c.sent([](const Packet& p) { return p.from == NodeId::replica(3) && as<StateRequestMsg>(p); }), 0u);
}

TEST(StateTransfer, ForgedReplyRejected) {
    Cluster c(4, 1, Scheme::TS, interval(4));
    c.drop = [](const Packet& p) {
        return p.to == NodeId::replica(3) && (normal_case(p) || as<StateReplyMsg>(p));
    };
    submit(c, 0, 5);
    c.run();
    ASSERT_TRUE(c[3].awaiting_state());

    StateReplyMsg reply;
    reply.certificate = *c[0].stable_certificate();
    reply.blocks = c[0].ledger().blocks();
    reply.snapshot = c[0].store().snapshot();
    reply.snapshot.kv.emplace_back("zz", Bytes{1}); // state no longer matches the certificate
    c.drop = {};
    c.inject(NodeId::replica(1), 3, reply);
    c.run(1);
    EXPECT_EQ(c[3].applied_count(), 0u);
    EXPECT_TRUE(c[3].awaiting_state());

    reply.snapshot = c[0].store().snapshot();
    reply.blocks.back().digest.bytes[0] ^= 1;
    c.inject(NodeId::replica(1), 3, reply);
    c.run(1);
    EXPECT_EQ(c[3].applied_count(), 0u);
}

TEST(StateTransfer, LaggingReplicaDoesNotExecuteWhileAwaiting) {
    Cluster c(4, 1, Scheme::TS, interval(4));
    c.drop = [](const Packet& p) {
        const auto* pr = as<ProposeMsg>(p);
        return p.to == NodeId::replica(3) && (as<StateReplyMsg>(p) || (pr && pr->seq == 0));
    };
    submit(c, 0, 7);
    c.run();
    // r3 missed seq 0, so nothing executes; it waits for the state at 4.
    EXPECT_EQ(c[3].applied_count(), 0u);
    EXPECT_TRUE(c[3].awaiting_state());
    c.drop = {};
    c.fire_timers(3);
    c.run();
    EXPECT_EQ(c[3].applied_count(), 7u);
    EXPECT_EQ(c[3].store().state_digest(), c[0].store().state_digest());
}

} // namespace
} // namespace poe
