// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/adversary.hpp"

#include <algorithm>
#include <map>

namespace poe {

Adversary::Adversary(const AdversarySpec& spec) : spec_(spec), faulty_(spec.faulty.begin(), spec.faulty.end()) {}

void Adversary::on_send(AdversaryContext&, ReplicaId, const Emission& out, std::vector<Emission>& result) {
    result.push_back(out);
}

namespace {

template <class T>
const T* as(const Emission& e) {
    return std::get_if<T>(e.msg.get());
}

Emission rewrite(const Emission& e, Message msg) {
    return {e.to, std::make_shared<const Message>(std::move(msg)), e.claimed_from};
}

std::vector<ReplicaId> honest_replicas(const Scenario& sc, const std::set<ReplicaId>& faulty) {
    std::vector<ReplicaId> out;
    for (ReplicaId r = 0; r < sc.n; ++r) {
        if (!faulty.contains(r)) out.push_back(r);
    }
    return out;
}

Digest random_digest(Rng& rng) {
    Digest d;
    for (auto& b : d.bytes) b = static_cast<std::uint8_t>(rng.next());
    return d;
}

class CrashProgram final : public Adversary {
  public:
    using Adversary::Adversary;
    bool crashed(ReplicaId r, SimTime now) const override { return controls(r) && now >= spec_.at_time; }
};

/// Sends a conflicting batch to a random subset of the honest replicas and
/// tries to complete a certificate for it with the faulty replicas' shares.
class EquivocatingPrimaryProgram final : public Adversary {
  public:
    using Adversary::Adversary;

    void on_send(AdversaryContext& ctx, ReplicaId from, const Emission& out, std::vector<Emission>& result) override {
        if (const auto* p = as<ProposeMsg>(out)) {
            Split* split = split_for(ctx, p->view, p->seq);
            if (split && out.to.is_replica() && split->group.contains(out.to.index)) {
                ProposeMsg alt = *p;
                alt.batch = split->batch;
                result.push_back(rewrite(out, alt));
                return;
            }
        } else if (const auto* s = as<SupportMsg>(out); s && ctx.scenario.scheme == Scheme::MAC) {
            // MAC: faulty supports vouch for whichever batch the receiver holds.
            auto it = splits_.find({s->view, s->seq});
            if (it != splits_.end() && out.to.is_replica() && it->second.group.contains(out.to.index)) {
                SupportMsg alt = *s;
                alt.share = ctx.auth.sign_share(from, it->second.certify_digest);
                result.push_back(rewrite(out, alt));
                return;
            }
        }
        result.push_back(out);
    }

    void on_deliver(AdversaryContext& ctx, NodeId from, ReplicaId to, const Message& msg,
                    std::vector<Emission>& extra) override {
        // TS: the faulty primary aggregates the alternative shares itself.
        if (ctx.scenario.scheme != Scheme::TS || !from.is_replica()) return;
        const auto* s = std::get_if<SupportMsg>(&msg);
        if (!s) return;
        auto it = splits_.find({s->view, s->seq});
        if (it == splits_.end()) return;
        Split& split = it->second;
        if (split.certified || to != s->view % ctx.scenario.n) return;
        if (s->share.digest != split.certify_digest || s->share.signer != from.index) return;
        if (!ctx.auth.verify_share(s->share)) return;
        split.shares[from.index] = s->share;
        for (ReplicaId r : faulty_) split.shares.try_emplace(r, ctx.auth.sign_share(r, split.certify_digest));
        if (split.shares.size() < ctx.scenario.nf()) return;
        std::vector<SignatureShare> shares;
        for (const auto& [r, share] : split.shares) shares.push_back(share);
        CertifyMsg c{s->view, s->seq, ctx.auth.aggregate(shares)};
        auto shared = std::make_shared<const Message>(c);
        for (ReplicaId r : split.group) extra.push_back({NodeId::replica(r), shared, std::nullopt});
        split.certified = true;
    }

  private:
    struct Split {
        std::set<ReplicaId> group; // receivers of the alternative batch
        Batch batch;
        Digest certify_digest;
        std::map<ReplicaId, SignatureShare> shares;
        bool certified = false;
    };

    Split* split_for(AdversaryContext& ctx, View view, SeqNum seq) {
        auto key = std::make_pair(view, seq);
        if (auto it = splits_.find(key); it != splits_.end()) return &it->second;
        if (decided_.contains(key)) return nullptr;
        decided_.insert(key);
        auto honest = honest_replicas(ctx.scenario, faulty_);
        if (honest.size() < 2 || !ctx.rng.chance(spec_.rate)) return nullptr;
        for (std::size_t i = honest.size(); i > 1; --i) std::swap(honest[i - 1], honest[ctx.rng.index(i)]);
        std::size_t size = 1 + ctx.rng.index(honest.size() - 1);

        Split split;
        split.group.insert(honest.begin(), honest.begin() + static_cast<long>(size));
        Command junk{OpKind::Put, "equivocation", Bytes{static_cast<std::uint8_t>(seq)}, {}};
        split.batch = Batch::make({SignedTransaction::make(ctx.auth, kAdversaryClient, next_nonce_++, junk.encode())});
        split.certify_digest = certify_digest(seq, view, split.batch.digest);
        return &splits_.emplace(key, std::move(split)).first->second;
    }

    std::map<std::pair<View, SeqNum>, Split> splits_;
    std::set<std::pair<View, SeqNum>> decided_;
    std::uint64_t next_nonce_ = 0;
};

/// Keeps up to f honest replicas out of the normal case entirely.
class DarkPrimaryProgram final : public Adversary {
  public:
    DarkPrimaryProgram(const AdversarySpec& spec, const Scenario& sc, Rng& rng) : Adversary(spec) {
        victims_.insert(spec.victims.begin(), spec.victims.end());
        if (victims_.empty()) {
            auto honest = honest_replicas(sc, faulty_);
            for (std::uint32_t i = 0; i < sc.f && !honest.empty(); ++i) {
                std::size_t pick = rng.index(honest.size());
                victims_.insert(honest[pick]);
                honest.erase(honest.begin() + static_cast<long>(pick));
            }
        }
    }

    void on_send(AdversaryContext&, ReplicaId, const Emission& out, std::vector<Emission>& result) override {
        bool normal_case = as<ProposeMsg>(out) || as<SupportMsg>(out) || as<CertifyMsg>(out);
        if (normal_case && out.to.is_replica() && victims_.contains(out.to.index)) return;
        result.push_back(out);
    }

  private:
    std::set<ReplicaId> victims_;
};

class SkipSeqProgram final : public Adversary {
  public:
    using Adversary::Adversary;

    void on_send(AdversaryContext&, ReplicaId, const Emission& out, std::vector<Emission>& result) override {
        if (const auto* p = as<ProposeMsg>(out); p && p->seq == spec_.skip_seq) return;
        result.push_back(out);
    }
};

class DelayLinksProgram final : public Adversary {
  public:
    DelayLinksProgram(const AdversarySpec& spec, const Scenario& sc, Rng& rng) : Adversary(spec), n_(sc.n) {
        extra_.resize(std::size_t{n_} * n_);
        for (auto& d : extra_) d = rng.uniform(0, spec.max_extra_delay);
    }

    SimTime extra_delay(NodeId from, NodeId to) const override {
        if (!from.is_replica() || !to.is_replica()) return 0;
        return extra_[std::size_t{from.index} * n_ + to.index];
    }

  private:
    std::uint32_t n_;
    std::vector<SimTime> extra_;
};

/// Faulty replicas emit invalid or misleading authenticators and try to
/// speak for honest replicas.
class ForgeSharesProgram final : public Adversary {
  public:
    using Adversary::Adversary;

    void on_send(AdversaryContext& ctx, ReplicaId from, const Emission& out, std::vector<Emission>& result) override {
        if (!ctx.rng.chance(spec_.rate)) {
            result.push_back(out);
            return;
        }
        auto honest = honest_replicas(ctx.scenario, faulty_);
        ReplicaId victim = honest[ctx.rng.index(honest.size())];
        if (ctx.rng.chance(0.2)) {
            // Spoofed copy in the victim's name, plus the original.
            Emission spoof = out;
            spoof.claimed_from = victim;
            result.push_back(spoof);
            result.push_back(out);
            return;
        }
        result.push_back(rewrite(out, tamper(ctx, from, victim, *out.msg)));
    }

  private:
    Message tamper(AdversaryContext& ctx, ReplicaId from, ReplicaId victim, Message msg) {
        Rng& rng = ctx.rng;
        std::visit(
            [&](auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, SupportMsg>) {
                    switch (rng.index(3)) {
                    case 0: m.share.tag.bytes[0] ^= 1; break;
                    case 1: m.share = ctx.auth.sign_share(from, random_digest(rng)); break;
                    default: m.share = ctx.auth.sign_share(from, m.share.digest), m.share.signer = victim; break;
                    }
                } else if constexpr (std::is_same_v<T, CertifyMsg>) {
                    if (rng.chance(0.5)) {
                        m.ts.tag.bytes[0] ^= 1;
                    } else {
                        m.ts.digest = random_digest(rng);
                    }
                } else if constexpr (std::is_same_v<T, ProposeMsg>) {
                    if (!m.batch.requests.empty()) m.batch.requests[0].sig.tag.bytes[0] ^= 1;
                } else if constexpr (std::is_same_v<T, InformMsg>) {
                    m.result.push_back(0xee);
                } else if constexpr (std::is_same_v<T, VcRequestMsg>) {
                    if (rng.chance(0.5) || m.history.empty()) {
                        m.sig.tag.bytes[0] ^= 1;
                    } else {
                        // A shorter but correctly signed history.
                        m.history.resize(rng.index(m.history.size()));
                        m.sig = ctx.auth.sign(from, signing_digest(m));
                    }
                } else if constexpr (std::is_same_v<T, CheckpointMsg>) {
                    m.state_digest = random_digest(rng);
                    m.sig = ctx.auth.sign(from, signing_digest(m));
                } else if constexpr (std::is_same_v<T, NvProposeMsg>) {
                    if (!m.proofs.empty()) m.proofs.pop_back();
                }
            },
            msg);
        return msg;
    }
};

} // namespace

std::unique_ptr<Adversary> make_adversary(const Scenario& sc, Rng& setup_rng) {
    const AdversarySpec& spec = sc.adversary;
    switch (spec.program) {
    case AdversaryKind::None: return std::make_unique<Adversary>(spec);
    case AdversaryKind::Crash: return std::make_unique<CrashProgram>(spec);
    case AdversaryKind::EquivocatingPrimary: return std::make_unique<EquivocatingPrimaryProgram>(spec);
    case AdversaryKind::DarkPrimary: return std::make_unique<DarkPrimaryProgram>(spec, sc, setup_rng);
    case AdversaryKind::SkipSeq: return std::make_unique<SkipSeqProgram>(spec);
    case AdversaryKind::DelayLinks: return std::make_unique<DelayLinksProgram>(spec, sc, setup_rng);
    case AdversaryKind::ForgeShares: return std::make_unique<ForgeSharesProgram>(spec);
    }
    throw ConfigInvalid("unknown adversary program");
}

} // namespace poe
