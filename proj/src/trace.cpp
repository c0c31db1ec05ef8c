// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/trace.hpp"

#include "poe/codec.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace poe {

using nlohmann::json;

namespace {

constexpr std::array kEventKinds = {
    std::pair{TraceEvent::Kind::Send, "send"},           std::pair{TraceEvent::Kind::Deliver, "deliver"},
    std::pair{TraceEvent::Kind::Drop, "drop"},           std::pair{TraceEvent::Kind::TimerFire, "timer"},
    std::pair{TraceEvent::Kind::Transition, "transition"}, std::pair{TraceEvent::Kind::Commit, "commit"},
};

constexpr std::array kTransitionKinds = {
    Transition::Kind::ViewCommit, Transition::Kind::Execute,          Transition::Kind::Rollback,
    Transition::Kind::EnterView,  Transition::Kind::StableCheckpoint, Transition::Kind::Install,
    Transition::Kind::VcRequest,  Transition::Kind::NvPropose,
};

TraceEvent::Kind parse_event_kind(const std::string& text) {
    for (const auto& [k, name] : kEventKinds) {
        if (text == name) return k;
    }
    throw MalformedMessage("unknown trace event kind: " + text);
}

Transition::Kind parse_transition_kind(const std::string& text) {
    for (auto k : kTransitionKinds) {
        if (text == to_string(k)) return k;
    }
    throw MalformedMessage("unknown transition kind: " + text);
}

json entry_to_json(const EntryRef& e) { return {{"seq", e.seq}, {"view", e.view}, {"digest", e.digest.hex()}}; }

json transition_to_json(const Transition& t) {
    json txns = json::array();
    for (const auto& d : t.txns) txns.push_back(d.hex());
    json entries = json::array();
    for (const auto& e : t.entries) entries.push_back(entry_to_json(e));
    return {{"kind", to_string(t.kind)}, {"view", t.view},   {"seq", t.seq},        {"digest", t.digest.hex()},
            {"aux", t.aux.hex()},        {"txns", txns},     {"entries", entries}};
}

Transition transition_from_json(const json& j) {
    Transition t;
    t.kind = parse_transition_kind(j.at("kind").get<std::string>());
    t.view = j.at("view").get<View>();
    t.seq = j.at("seq").get<SeqNum>();
    t.digest = Digest::from_hex(j.at("digest").get<std::string>());
    t.aux = Digest::from_hex(j.at("aux").get<std::string>());
    for (const auto& d : j.at("txns")) t.txns.push_back(Digest::from_hex(d.get<std::string>()));
    for (const auto& e : j.at("entries")) {
        t.entries.push_back({e.at("seq").get<SeqNum>(), e.at("view").get<View>(),
                             Digest::from_hex(e.at("digest").get<std::string>())});
    }
    return t;
}

json commit_to_json(const CommitEvent& c) {
    return {{"client", c.client},       {"nonce", c.nonce}, {"txn", c.txn_digest.hex()}, {"batch", c.batch_digest.hex()},
            {"view", c.view},           {"seq", c.seq},     {"result", to_hex(c.result)}};
}

CommitEvent commit_from_json(const json& j) {
    CommitEvent c;
    c.client = j.at("client").get<ClientId>();
    c.nonce = j.at("nonce").get<std::uint64_t>();
    c.txn_digest = Digest::from_hex(j.at("txn").get<std::string>());
    c.batch_digest = Digest::from_hex(j.at("batch").get<std::string>());
    c.view = j.at("view").get<View>();
    c.seq = j.at("seq").get<SeqNum>();
    c.result = from_hex(j.at("result").get<std::string>());
    return c;
}

json header_to_json(const TraceHeader& h) {
    return {{"trace", "poe-sim"}, {"n", h.n},           {"f", h.f},         {"scheme", to_string(h.scheme)},
            {"seed", h.seed},     {"faulty", h.faulty}, {"clients", h.clients}};
}

TraceHeader header_from_json(const json& j) {
    if (j.at("trace").get<std::string>() != "poe-sim") throw MalformedMessage("not a poe-sim trace");
    TraceHeader h;
    h.n = j.at("n").get<std::uint32_t>();
    h.f = j.at("f").get<std::uint32_t>();
    h.scheme = parse_scheme(j.at("scheme").get<std::string>());
    h.seed = j.at("seed").get<std::uint64_t>();
    h.faulty = j.at("faulty").get<std::vector<ReplicaId>>();
    h.clients = j.at("clients").get<std::uint32_t>();
    return h;
}

json event_to_json(const TraceEvent& e) {
    json j = {{"i", e.index}, {"t", e.time}, {"kind", to_string(e.kind)}, {"node", e.node.str()}};
    if (e.peer) j["peer"] = e.peer->str();
    if (!e.msg_type.empty()) j["msg"] = e.msg_type;
    if (!e.reason.empty()) j["reason"] = e.reason;
    if (e.hex) j["hex"] = *e.hex;
    if (e.timer) j["timer"] = *e.timer;
    if (e.transition) j["transition"] = transition_to_json(*e.transition);
    if (e.commit) j["commit"] = commit_to_json(*e.commit);
    return j;
}

TraceEvent event_from_json(const json& j) {
    TraceEvent e;
    e.index = j.at("i").get<std::uint64_t>();
    e.time = j.at("t").get<SimTime>();
    e.kind = parse_event_kind(j.at("kind").get<std::string>());
    e.node = NodeId::parse(j.at("node").get<std::string>());
    if (j.contains("peer")) e.peer = NodeId::parse(j.at("peer").get<std::string>());
    if (j.contains("msg")) e.msg_type = j.at("msg").get<std::string>();
    if (j.contains("reason")) e.reason = j.at("reason").get<std::string>();
    if (j.contains("hex")) e.hex = j.at("hex").get<std::string>();
    if (j.contains("timer")) e.timer = j.at("timer").get<TimerId>();
    if (j.contains("transition")) e.transition = transition_from_json(j.at("transition"));
    if (j.contains("commit")) e.commit = commit_from_json(j.at("commit"));
    if (e.kind == TraceEvent::Kind::Transition && !e.transition) throw MalformedMessage("transition event without body");
    if (e.kind == TraceEvent::Kind::Commit && !e.commit) throw MalformedMessage("commit event without body");
    return e;
}

} // namespace

std::string_view to_string(TraceEvent::Kind kind) {
    for (const auto& [k, name] : kEventKinds) {
        if (k == kind) return name;
    }
    return "unknown";
}

void write_trace(std::ostream& out, const Trace& trace) {
    out << header_to_json(trace.header).dump() << '\n';
    for (const auto& e : trace.events) out << event_to_json(e).dump() << '\n';
}

std::string trace_to_string(const Trace& trace) {
    std::ostringstream out;
    write_trace(out, trace);
    return out.str();
}

Trace parse_trace(std::istream& in) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            if (!have_header) {
                trace.header = header_from_json(j);
                have_header = true;
            } else {
                trace.events.push_back(event_from_json(j));
            }
        } catch (const json::exception& e) {
            throw MalformedMessage("trace line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw MalformedMessage("trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw MalformedMessage("empty trace");
    return trace;
}

Trace read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open trace file: " + path);
    return parse_trace(in);
}

} // namespace poe
