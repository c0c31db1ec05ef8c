// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/checker.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>
#include <tuple>

namespace poe {

std::map<std::string, std::size_t> CheckReport::counts() const {
    std::map<std::string, std::size_t> out;
    for (const auto& v : violations) ++out[v.kind];
    return out;
}

std::string CheckReport::summary() const {
    if (ok()) return "no violations";
    std::string out;
    for (const auto& [kind, n] : counts()) out += fmt::format("{}{}={}", out.empty() ? "" : " ", kind, n);
    return out;
}

namespace {

using EntryKey = std::tuple<SeqNum, View, Digest>;

EntryKey key_of(const EntryRef& e) { return {e.seq, e.view, e.digest}; }

std::string short_hex(const Digest& d) { return d.hex().substr(0, 12); }

struct ReplicaModel {
    std::vector<EntryRef> executed;
    std::optional<View> last_entered;
};

struct CommitRecord {
    std::uint64_t index;
    CommitEvent commit;
};

class Checker {
  public:
    explicit Checker(const Trace& trace) : trace_(trace) {
        faulty_.insert(trace.header.faulty.begin(), trace.header.faulty.end());
    }

    CheckReport run() {
        collect_commits();
        SimTime last_time = trace_.events.empty() ? 0 : trace_.events.front().time;
        for (std::size_t i = 0; i < trace_.events.size(); ++i) {
            const TraceEvent& e = trace_.events[i];
            if (e.time < last_time) {
                flag("time_regression", e.index, fmt::format("time {} after {}", e.time, last_time));
            }
            last_time = std::max(last_time, e.time);
            if (e.kind == TraceEvent::Kind::Commit) on_commit(e);
            if (e.kind != TraceEvent::Kind::Transition || !e.node.is_replica()) continue;
            if (faulty_.contains(e.node.index)) continue;
            on_transition(e, *e.transition);
        }
        final_prefix_check();
        return std::move(report_);
    }

  private:
    void flag(std::string kind, std::uint64_t index, std::string detail) {
        report_.violations.push_back({std::move(kind), index, std::move(detail)});
    }

    void collect_commits() {
        std::map<SeqNum, const CommitRecord*> by_seq;
        std::map<std::pair<ClientId, std::uint64_t>, const CommitRecord*> by_request;
        for (const auto& e : trace_.events) {
            if (e.kind == TraceEvent::Kind::Commit) commits_.push_back({e.index, *e.commit});
        }
        for (const auto& c : commits_) {
            auto [it, fresh] = by_seq.emplace(c.commit.seq, &c);
            if (!fresh && std::tie(it->second->commit.view, it->second->commit.batch_digest) !=
                              std::tie(c.commit.view, c.commit.batch_digest)) {
                flag("commit_uniqueness", c.index,
                     fmt::format("seq {} committed as {}@v{} and {}@v{}", c.commit.seq,
                                 short_hex(it->second->commit.batch_digest), it->second->commit.view,
                                 short_hex(c.commit.batch_digest), c.commit.view));
            }
            auto [r, first] = by_request.emplace(std::make_pair(c.commit.client, c.commit.nonce), &c);
            if (!first) {
                flag("commit_uniqueness", c.index,
                     fmt::format("request c{}/{} committed twice", c.commit.client, c.commit.nonce));
            }
            committed_at_seq_.emplace(c.commit.seq, &c);
        }
    }

    bool is_committed_before(const EntryRef& e, std::uint64_t index) const {
        auto [lo, hi] = committed_at_seq_.equal_range(e.seq);
        for (auto it = lo; it != hi; ++it) {
            const CommitEvent& c = it->second->commit;
            if (it->second->index < index && c.view == e.view && c.batch_digest == e.digest) return true;
        }
        return false;
    }

    void on_commit(const TraceEvent& e) {
        const CommitEvent& c = *e.commit;
        auto it = executions_.find({c.seq, c.view, c.batch_digest});
        std::size_t honest = it == executions_.end() ? 0 : it->second.size();
        std::size_t need = trace_.header.n - 2 * std::size_t{trace_.header.f};
        if (honest < need) {
            flag("commit_validity", e.index,
                 fmt::format("c{}/{} committed at seq {} with {} non-faulty executions, need {}", c.client, c.nonce,
                             c.seq, honest, need));
        }
    }

    void on_transition(const TraceEvent& ev, const Transition& t) {
        ReplicaId r = ev.node.index;
        ReplicaModel& m = models_[r];
        switch (t.kind) {
        case Transition::Kind::ViewCommit: {
            auto [it, fresh] = view_commits_.emplace(std::make_pair(t.view, t.seq), t.digest);
            if (!fresh && it->second != t.digest) {
                flag("quorum_uniqueness", ev.index,
                     fmt::format("r{} view-committed {} at (v{}, k{}) but {} was view-committed there", r,
                                 short_hex(t.digest), t.view, t.seq, short_hex(it->second)));
            }
            break;
        }
        case Transition::Kind::Execute: {
            if (t.seq != m.executed.size()) {
                flag("execution_gap", ev.index,
                     fmt::format("r{} executed seq {} with {} entries applied", r, t.seq, m.executed.size()));
            }
            EntryRef ref{t.seq, t.view, t.digest};
            m.executed.push_back(ref);
            executions_[key_of(ref)].insert(r);
            break;
        }
        case Transition::Kind::Rollback: {
            for (const auto& e : t.entries) {
                if (is_committed_before(e, ev.index)) {
                    flag("rollback_committed", ev.index,
                         fmt::format("r{} rolled back client-committed seq {} (v{})", r, e.seq, e.view));
                }
            }
            if (t.seq > m.executed.size()) {
                flag("execution_gap", ev.index, fmt::format("r{} rolled back to {} entries, had {}", r, t.seq,
                                                            m.executed.size()));
            }
            m.executed.resize(std::min<std::size_t>(t.seq, m.executed.size()));
            break;
        }
        case Transition::Kind::Install: {
            std::size_t shared = std::min(m.executed.size(), t.entries.size());
            for (std::size_t s = 0; s < shared; ++s) {
                if (m.executed[s] != t.entries[s] && is_committed_before(m.executed[s], ev.index)) {
                    flag("rollback_committed", ev.index,
                         fmt::format("r{} replaced client-committed seq {} by state transfer", r, s));
                }
            }
            m.executed = t.entries;
            for (const auto& e : t.entries) executions_[key_of(e)].insert(r);
            check_stable_prefix(ev, r, m, t.seq);
            break;
        }
        case Transition::Kind::EnterView: {
            if (m.last_entered && t.view <= *m.last_entered) {
                flag("view_regression", ev.index,
                     fmt::format("r{} entered view {} after view {}", r, t.view, *m.last_entered));
            }
            m.last_entered = t.view;
            check_new_view(ev, t, m);
            break;
        }
        case Transition::Kind::StableCheckpoint: {
            check_stable_prefix(ev, r, m, t.seq);
            auto [it, fresh] = checkpoints_.emplace(t.seq, std::make_pair(t.digest, t.aux));
            if (!fresh && it->second != std::make_pair(t.digest, t.aux)) {
                flag("checkpoint_divergence", ev.index,
                     fmt::format("r{} stable checkpoint at seq {} disagrees with an earlier one", r, t.seq));
            }
            break;
        }
        case Transition::Kind::VcRequest:
        case Transition::Kind::NvPropose: break;
        }
    }

    // A new view must not discard a client-committed entry the entering
    // replica holds: E' keeps every such entry unchanged.
    void check_new_view(const TraceEvent& ev, const Transition& t, const ReplicaModel& m) {
        for (const auto& e : m.executed) {
            if (e.seq < t.seq || !is_committed_before(e, ev.index)) continue;
            std::size_t pos = e.seq - t.seq;
            bool kept = pos < t.entries.size() && t.entries[pos] == e;
            if (!kept) {
                flag("new_view_missing_commit", ev.index,
                     fmt::format("r{} entered view {} without committed seq {} (v{})", ev.node.index, t.view, e.seq,
                                 e.view));
            }
        }
    }

    // A committed entry can only be displaced by an older speculative one
    // that a lagging replica has not rolled back yet.
    void final_prefix_check() {
        std::uint64_t end = trace_.events.empty() ? 0 : trace_.events.back().index;
        for (const auto& [r, m] : models_) {
            for (const auto& c : commits_) {
                const CommitEvent& ce = c.commit;
                if (ce.seq >= m.executed.size()) continue;
                const EntryRef& e = m.executed[ce.seq];
                if (e.view >= ce.view && (e.view != ce.view || e.digest != ce.batch_digest)) {
                    flag("ledger_divergence", end,
                         fmt::format("r{} holds {}@v{} at committed seq {} ({}@v{})", r, short_hex(e.digest), e.view,
                                     ce.seq, short_hex(ce.batch_digest), ce.view));
                }
            }
        }
    }

    // Stable prefixes are final, so they must agree with every commit.
    void check_stable_prefix(const TraceEvent& ev, ReplicaId r, const ReplicaModel& m, SeqNum stable) {
        for (const auto& c : commits_) {
            const CommitEvent& ce = c.commit;
            if (ce.seq > stable) continue;
            bool agrees = ce.seq < m.executed.size() && m.executed[ce.seq].view == ce.view &&
                          m.executed[ce.seq].digest == ce.batch_digest;
            if (!agrees) {
                flag("ledger_divergence", ev.index,
                     fmt::format("r{} stable prefix up to seq {} disagrees with committed seq {}", r, stable, ce.seq));
            }
        }
    }

    const Trace& trace_;
    std::set<ReplicaId> faulty_;
    CheckReport report_;
    std::vector<CommitRecord> commits_;
    std::multimap<SeqNum, const CommitRecord*> committed_at_seq_;
    std::map<ReplicaId, ReplicaModel> models_;
    std::map<std::pair<View, SeqNum>, Digest> view_commits_;
    std::map<EntryKey, std::set<ReplicaId>> executions_;
    std::map<SeqNum, std::pair<Digest, Digest>> checkpoints_;
};

} // namespace

CheckReport check_trace(const Trace& trace) { return Checker(trace).run(); }

} // namespace poe
