// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/ledger.hpp"

#include <gtest/gtest.h>

namespace poe {
namespace {

class LedgerTest : public ::testing::Test {
  protected:
    CertifyProof proof(SeqNum k, View v, const Digest& batch) {
        Digest h = certify_digest(k, v, batch);
        std::vector<SignatureShare> shares;
        for (ReplicaId r = 0; r < 3; ++r) shares.push_back(auth.sign_share(r, h));
        return {v, k, auth.aggregate(shares)};
    }
    void append(Ledger& l, SeqNum k, View v = 0) {
        Digest b = hash("batch" + std::to_string(k) + "/" + std::to_string(v));
        l.append(k, v, b, proof(k, v, b));
    }

    KeyedHashAuthenticator auth{4, 3, 3};
};

TEST_F(LedgerTest, ChainsFromGenesis) {
    Ledger l(&auth);
    EXPECT_TRUE(l.verify_chain());
    EXPECT_EQ(l.head(), genesis_hash(0));
    append(l, 0);
    EXPECT_EQ(l.at(0).prev_hash, genesis_hash(0));
    append(l, 1);
    EXPECT_EQ(l.at(1).prev_hash, l.at(0).hash());
    EXPECT_TRUE(l.verify_chain());
}

TEST_F(LedgerTest, OutOfOrderAppend) {
    Ledger l(&auth);
    append(l, 0);
    EXPECT_THROW(append(l, 2), LedgerError);
    EXPECT_EQ(l.size(), 1u);
}

TEST_F(LedgerTest, ForgedProofRejected) {
    Ledger l(&auth);
    Digest b = hash("b");
    CertifyProof p = proof(0, 0, hash("another batch"));
    EXPECT_THROW(l.append(0, 0, b, p), LedgerError);
    CertifyProof wrong_slot = proof(1, 0, b);
    EXPECT_THROW(l.append(0, 0, b, wrong_slot), LedgerError);
    EXPECT_TRUE(l.empty());
}

TEST_F(LedgerTest, TruncateAndReappendIsIdentical) {
    Ledger l(&auth);
    for (SeqNum k = 0; k < 5; ++k) append(l, k);
    Digest before = l.head();
    l.truncate_to_count(5); // tip: no-op
    EXPECT_EQ(l.head(), before);
    l.truncate_to_count(2);
    EXPECT_EQ(l.size(), 2u);
    for (SeqNum k = 2; k < 5; ++k) append(l, k);
    EXPECT_EQ(l.head(), before);
}

TEST_F(LedgerTest, TruncateBelowStableRefused) {
    Ledger l(&auth);
    for (SeqNum k = 0; k < 4; ++k) append(l, k);
    l.protect(3);
    EXPECT_THROW(l.truncate_to_count(2), LedgerError);
    EXPECT_NO_THROW(l.truncate_to_count(3));
}

TEST_F(LedgerTest, MutationsBreakVerification) {
    Ledger l(&auth);
    for (SeqNum k = 0; k < 4; ++k) append(l, k);
    auto blocks = l.blocks();
    ASSERT_TRUE(verify_chain(blocks, l.genesis(), &auth));

    auto mutated = blocks;
    mutated[1].digest.bytes[0] ^= 1;
    EXPECT_FALSE(verify_chain(mutated, l.genesis(), &auth));

    for (std::size_t i = 0; i < blocks.size(); ++i) {
        for (std::size_t j = i + 1; j < blocks.size(); ++j) {
            auto swapped = blocks;
            std::swap(swapped[i], swapped[j]);
            EXPECT_FALSE(verify_chain(swapped, l.genesis(), &auth)) << i << "<->" << j;
        }
    }
    EXPECT_FALSE(verify_chain(blocks, genesis_hash(1), &auth));
}

TEST_F(LedgerTest, ProofIsNotPartOfIdentity) {
    // Different valid quorums certify the same header.
    Digest b = hash("b");
    Digest h = certify_digest(0, 0, b);
    std::vector<SignatureShare> other{auth.sign_share(1, h), auth.sign_share(2, h), auth.sign_share(3, h)};
    Ledger x(&auth), y(&auth);
    x.append(0, 0, b, proof(0, 0, b));
    y.append(0, 0, b, CertifyProof{0, 0, auth.aggregate(other)});
    EXPECT_EQ(x.head(), y.head());
}

TEST_F(LedgerTest, ExportParsesAndDiffs) {
    Ledger a(&auth), b(&auth);
    for (SeqNum k = 0; k < 4; ++k) append(a, k);
    for (SeqNum k = 0; k < 2; ++k) append(b, k);
    auto pa = parse_ledger_export(a.export_text());
    EXPECT_EQ(pa, a.blocks());

    LedgerDiff prefix = diff_ledgers(pa, parse_ledger_export(b.export_text()));
    EXPECT_FALSE(prefix.diverged);
    EXPECT_EQ(prefix.common_prefix, 2u);

    append(b, 2, 1); // a different batch at seq 2
    LedgerDiff split = diff_ledgers(pa, b.blocks());
    EXPECT_TRUE(split.diverged);
    EXPECT_EQ(split.first_mismatch, SeqNum{2});
    EXPECT_THROW(parse_ledger_export("zz\n"), MalformedMessage);
}

TEST_F(LedgerTest, ReplaceRequiresValidChain) {
    Ledger src(&auth), dst(&auth);
    for (SeqNum k = 0; k < 3; ++k) append(src, k);
    dst.replace(src.blocks());
    EXPECT_EQ(dst.head(), src.head());
    auto bad = src.blocks();
    bad.erase(bad.begin() + 1);
    EXPECT_THROW(dst.replace(bad), LedgerError);
}

} // namespace
} // namespace poe
