// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/simnet.hpp"

#include "poe/codec.hpp"

#include <fmt/format.h>

namespace poe {

std::string metrics_csv(const Metrics& m) {
    std::string out = "time,decisions,commits,view,msgs_propose,msgs_support,msgs_certify,msgs_inform,msgs_vc\n";
    for (const auto& s : m.samples) {
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", s.time, s.decisions, s.commits, s.view, s.msgs_propose,
                           s.msgs_support, s.msgs_certify, s.msgs_inform, s.msgs_vc);
    }
    return out;
}

namespace {

std::unique_ptr<Authenticator> make_authenticator(const Scenario& sc) {
    if (sc.latency_mode) return std::make_unique<NullAuthenticator>(sc.nf());
    return std::make_unique<KeyedHashAuthenticator>(sc.n, sc.nf(), sc.seed);
}

std::uint64_t count(const std::map<std::string, std::uint64_t>& m, const char* key) {
    auto it = m.find(key);
    return it == m.end() ? 0 : it->second;
}

} // namespace

Simulation::Simulation(Scenario scenario)
    : sc_(std::move(scenario)),
      net_rng_(sc_.seed, 1),
      work_rng_(sc_.seed, 2),
      adv_rng_(sc_.seed, 3) {
    sc_.validate();
    auth_ = make_authenticator(sc_);
    adversary_ = make_adversary(sc_, adv_rng_);
    for (ReplicaId r = 0; r < sc_.n; ++r) replicas_.push_back(std::make_unique<Replica>(sc_.replica_config(r), *auth_));
    for (ClientId c = 0; c < sc_.clients; ++c) {
        ClientConfig cc;
        cc.id = c;
        cc.n = sc_.n;
        cc.f = sc_.f;
        cc.timeout = sc_.client_timeout;
        cc.retransmit = !sc_.latency_mode;
        clients_.push_back(std::make_unique<Client>(cc, *auth_));
    }
    counters_.assign(sc_.n + sc_.clients + 1, 0);

    trace_.header.n = sc_.n;
    trace_.header.f = sc_.f;
    trace_.header.scheme = sc_.scheme;
    trace_.header.seed = sc_.seed;
    trace_.header.faulty.assign(adversary_->faulty().begin(), adversary_->faulty().end());
    trace_.header.clients = sc_.clients;

    if (sc_.requests_per_client > 0) {
        for (ClientId c = 0; c < sc_.clients; ++c) {
            Event e{};
            e.kind = Event::Kind::Submit;
            e.to = NodeId::client(c);
            schedule(e, NodeId::client(sc_.clients)); // system origin ranks last
        }
    }
}

Simulation::~Simulation() = default;

std::uint32_t Simulation::rank(NodeId node) const {
    if (node.is_replica()) return std::min(node.index, sc_.n);
    return sc_.n + std::min(node.index, sc_.clients);
}

void Simulation::schedule(Event e, NodeId origin) {
    e.origin = rank(origin);
    e.counter = counters_[e.origin]++;
    queue_.push(std::move(e));
}

SimTime Simulation::sample_delay() {
    if (sc_.delay.kind == DelayModel::Kind::Fixed) return sc_.delay.lo;
    return net_rng_.uniform(sc_.delay.lo, sc_.delay.hi);
}

bool Simulation::partitioned(NodeId a, NodeId b) const {
    if (!a.is_replica() || !b.is_replica() || a == b) return false;
    auto group_of = [](const Partition& p, ReplicaId r) {
        for (std::size_t g = 0; g < p.groups.size(); ++g) {
            for (ReplicaId member : p.groups[g]) {
                if (member == r) return g;
            }
        }
        return p.groups.size();
    };
    for (const auto& p : sc_.partitions) {
        if (now_ >= p.start && now_ < p.end && group_of(p, a.index) != group_of(p, b.index)) return true;
    }
    return false;
}

void Simulation::record(TraceEvent e) {
    bool network = e.kind == TraceEvent::Kind::Send || e.kind == TraceEvent::Kind::Deliver ||
                   e.kind == TraceEvent::Kind::Drop || e.kind == TraceEvent::Kind::TimerFire;
    if (network && !sc_.record_network) return;
    e.index = trace_.events.size();
    e.time = now_;
    trace_.events.push_back(std::move(e));
}

void Simulation::record_transition(ReplicaId r, const Transition& t) {
    TraceEvent e;
    e.kind = TraceEvent::Kind::Transition;
    e.node = NodeId::replica(r);
    e.transition = t;
    record(std::move(e));

    if (t.kind == Transition::Kind::ViewCommit) {
        auto& who = view_commits_[{t.view, t.seq, t.digest}];
        who.insert(r);
        if (who.size() >= sc_.nf() && decided_.insert(t.seq).second) {
            ++metrics_.decisions;
            metrics_.last_decision_time = now_;
        }
    } else if (t.kind == Transition::Kind::EnterView && !adversary_->controls(r)) {
        metrics_.max_view = std::max(metrics_.max_view, t.view);
    }
}

void Simulation::record_commit(const CommitEvent& c) {
    TraceEvent e;
    e.kind = TraceEvent::Kind::Commit;
    e.node = NodeId::client(c.client);
    e.commit = c;
    record(std::move(e));

    ++metrics_.commits;
    metrics_.last_commit_time = now_;
    if (auto it = submit_times_.find({c.client, c.nonce}); it != submit_times_.end()) {
        metrics_.latencies.push_back(now_ - it->second);
    }
    if (metrics_.commits == std::uint64_t{sc_.clients} * sc_.requests_per_client) all_committed_at_ = now_;
}

Bytes Simulation::make_payload(ClientId) {
    Command cmd;
    cmd.op = work_rng_.chance(sc_.write_ratio) ? OpKind::Put : OpKind::Get;
    cmd.key = fmt::format("k{}", work_rng_.uniform(0, sc_.key_space - 1));
    if (cmd.op == OpKind::Put) {
        cmd.value.resize(8);
        for (auto& b : cmd.value) b = static_cast<std::uint8_t>(work_rng_.next());
    }
    cmd.padding.assign(sc_.command_padding, 0);
    return cmd.encode();
}

void Simulation::transmit(NodeId from, const Emission& em) {
    const Message& msg = *em.msg;
    ++metrics_.messages[std::string(message_name(msg))];
    NodeId claimed = em.claimed_from ? NodeId::replica(*em.claimed_from) : from;

    TraceEvent send;
    send.kind = TraceEvent::Kind::Send;
    send.node = from;
    send.peer = em.to;
    send.msg_type = message_name(msg);
    std::optional<Bytes> bytes;
    bool mac_channel = sc_.scheme == Scheme::MAC && !sc_.latency_mode;
    if (sc_.record_messages || mac_channel) bytes = encode(msg);
    if (sc_.record_messages) send.hex = to_hex(*bytes);
    record(send);

    auto drop = [&](const char* reason) {
        ++metrics_.dropped;
        TraceEvent d;
        d.kind = TraceEvent::Kind::Drop;
        d.node = em.to;
        d.peer = claimed;
        d.msg_type = message_name(msg);
        d.reason = reason;
        record(std::move(d));
    };

    bool exists = em.to.is_replica() ? em.to.index < sc_.n : em.to.index < sc_.clients;
    if (!exists) return drop("no_such_node");
    // Without MACs the simulator vouches for the channel identity.
    if (claimed != from && !mac_channel) return drop("spoofed");
    if (em.to != from) {
        if (partitioned(from, em.to)) return drop("partition");
        if (sc_.drop_rate > 0 && net_rng_.chance(sc_.drop_rate)) return drop("lossy_link");
    }

    Event e{};
    e.kind = Event::Kind::Deliver;
    e.time = now_ + sample_delay() + adversary_->extra_delay(from, em.to);
    e.from = claimed;
    e.to = em.to;
    e.msg = em.msg;
    if (mac_channel) e.mac = auth_->mac(from, em.to, *bytes);
    schedule(std::move(e), from);
}

void Simulation::apply_effects(NodeId node, Effects& fx) {
    if (node.is_replica()) {
        for (const auto& t : fx.transitions) record_transition(node.index, t);
    }
    for (const auto& t : fx.timers) {
        Event e{};
        e.kind = Event::Kind::Timer;
        e.time = now_ + t.delay;
        e.to = node;
        e.timer = t.id;
        schedule(std::move(e), node);
    }
    bool controlled = node.is_replica() && adversary_->controls(node.index);
    AdversaryContext ctx{now_, adv_rng_, *auth_, sc_};
    std::vector<Emission> out;
    for (const auto& s : fx.sends) {
        Emission em{s.to, s.msg, std::nullopt};
        if (!controlled) {
            transmit(node, em);
            continue;
        }
        out.clear();
        adversary_->on_send(ctx, node.index, em, out);
        for (const auto& o : out) transmit(node, o);
    }
    fx.clear();
}

void Simulation::deliver(const Event& e) {
    const Message& msg = *e.msg;
    auto drop = [&](const char* reason) {
        ++metrics_.dropped;
        TraceEvent d;
        d.kind = TraceEvent::Kind::Drop;
        d.node = e.to;
        d.peer = e.from;
        d.msg_type = message_name(msg);
        d.reason = reason;
        record(std::move(d));
    };

    if (e.to.is_replica() && adversary_->crashed(e.to.index, now_)) return drop("crashed");
    if (e.mac) {
        bool ok = e.mac->sender == e.from && e.mac->receiver == e.to && auth_->verify_mac(*e.mac, encode(msg));
        if (!ok) return drop("bad_mac");
    }

    TraceEvent d;
    d.kind = TraceEvent::Kind::Deliver;
    d.node = e.to;
    d.peer = e.from;
    d.msg_type = message_name(msg);
    record(std::move(d));

    Effects fx;
    if (e.to.is_replica()) {
        ReplicaId r = e.to.index;
        if (adversary_->controls(r)) {
            AdversaryContext ctx{now_, adv_rng_, *auth_, sc_};
            std::vector<Emission> extra;
            adversary_->on_deliver(ctx, e.from, r, msg, extra);
            for (const auto& em : extra) transmit(e.to, em);
        }
        replicas_[r]->on_message(e.from, msg, fx);
        apply_effects(e.to, fx);
        return;
    }
    const auto* inform = std::get_if<InformMsg>(&msg);
    if (!inform || !e.from.is_replica()) return;
    if (auto commit = clients_[e.to.index]->on_inform(e.from.index, *inform, fx)) record_commit(*commit);
    apply_effects(e.to, fx);
}

void Simulation::dispatch(const Event& e) {
    Effects fx;
    switch (e.kind) {
    case Event::Kind::Deliver: deliver(e); return;
    case Event::Kind::Timer: {
        if (e.to.is_replica() && adversary_->crashed(e.to.index, now_)) return;
        TraceEvent t;
        t.kind = TraceEvent::Kind::TimerFire;
        t.node = e.to;
        t.timer = e.timer;
        record(std::move(t));
        if (e.to.is_replica()) {
            replicas_[e.to.index]->on_timer(e.timer, fx);
        } else {
            clients_[e.to.index]->on_timer(e.timer, fx);
        }
        apply_effects(e.to, fx);
        return;
    }
    case Event::Kind::Submit: {
        Client& c = *clients_[e.to.index];
        std::uint64_t nonce = c.next_nonce();
        submit_times_[{c.id(), nonce}] = now_;
        ++metrics_.submitted;
        c.submit(make_payload(c.id()), fx);
        apply_effects(e.to, fx);
        if (c.next_nonce() < sc_.requests_per_client) {
            Event next{};
            next.kind = Event::Kind::Submit;
            next.time = now_ + sc_.submit_interval;
            next.to = e.to;
            schedule(std::move(next), e.to);
        }
        return;
    }
    }
}

void Simulation::sample_metrics_until(SimTime t) {
    while (next_sample_ < t) {
        MetricsSample s;
        s.time = next_sample_;
        s.decisions = metrics_.decisions;
        s.commits = metrics_.commits;
        s.view = metrics_.max_view;
        s.msgs_propose = count(metrics_.messages, "propose");
        s.msgs_support = count(metrics_.messages, "support");
        s.msgs_certify = count(metrics_.messages, "certify");
        s.msgs_inform = count(metrics_.messages, "inform");
        s.msgs_vc = count(metrics_.messages, "vc_request") + count(metrics_.messages, "nv_propose");
        metrics_.samples.push_back(s);
        next_sample_ += sc_.metrics_interval;
    }
}

bool Simulation::done() const {
    return sc_.decision_target && metrics_.decisions >= *sc_.decision_target;
}

RunResult Simulation::run() {
    while (!queue_.empty() && !done()) {
        SimTime t = queue_.top().time;
        if (t > sc_.duration) break;
        if (sc_.stop_when_committed && all_committed_at_ && t > *all_committed_at_ + sc_.drain) break;
        Event e = queue_.top();
        queue_.pop();
        sample_metrics_until(t);
        now_ = t;
        dispatch(e);
    }
    metrics_.end_time = now_;
    sample_metrics_until(now_ + 1);

    RunResult result;
    for (ReplicaId r = 0; r < sc_.n; ++r) {
        const Replica& rep = *replicas_[r];
        ReplicaSummary s;
        s.id = r;
        s.faulty = adversary_->controls(r);
        s.view = rep.view();
        s.applied = rep.applied_count();
        s.stable = rep.stable_count();
        s.ledger_head = rep.ledger().head();
        s.ledger_export = rep.ledger().export_text();
        result.replicas.push_back(std::move(s));
    }
    result.trace = std::move(trace_);
    result.metrics = std::move(metrics_);
    return result;
}

RunResult run_scenario(const Scenario& scenario) {
    Simulation sim(scenario);
    return sim.run();
}

} // namespace poe
