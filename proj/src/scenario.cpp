// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/scenario.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace poe {

using nlohmann::json;

namespace {

const std::pair<AdversaryKind, const char*> kAdversaryNames[] = {
    {AdversaryKind::None, "none"},
    {AdversaryKind::Crash, "crash"},
    {AdversaryKind::EquivocatingPrimary, "equivocating_primary"},
    {AdversaryKind::DarkPrimary, "dark_primary"},
    {AdversaryKind::SkipSeq, "skip_seq"},
    {AdversaryKind::DelayLinks, "delay_links"},
    {AdversaryKind::ForgeShares, "forge_shares"},
};

template <class T>
T get_as(const json& value, const std::string& key) {
    try {
        return value.get<T>();
    } catch (const json::exception& e) {
        throw ConfigInvalid(fmt::format("bad value for '{}': {}", key, e.what()));
    }
}

void require_object(const json& j, const std::string& what) {
    if (!j.is_object()) throw ConfigInvalid(what + " must be an object");
}

DelayModel delay_from_json(const json& j) {
    require_object(j, "delay");
    DelayModel d;
    std::string model = "uniform";
    std::optional<SimTime> fixed, lo, hi;
    for (const auto& [key, value] : j.items()) {
        if (key == "model") model = get_as<std::string>(value, key);
        else if (key == "d") fixed = get_as<SimTime>(value, key);
        else if (key == "lo") lo = get_as<SimTime>(value, key);
        else if (key == "hi") hi = get_as<SimTime>(value, key);
        else throw ConfigInvalid("unknown key in delay: " + key);
    }
    if (model == "fixed") {
        if (!fixed || lo || hi) throw ConfigInvalid("fixed delay takes exactly 'd'");
        d = DelayModel::fixed(*fixed);
    } else if (model == "uniform") {
        if (fixed || !lo || !hi) throw ConfigInvalid("uniform delay takes 'lo' and 'hi'");
        d = DelayModel::uniform(*lo, *hi);
    } else {
        throw ConfigInvalid("unknown delay model: " + model);
    }
    return d;
}

json delay_to_json(const DelayModel& d) {
    if (d.kind == DelayModel::Kind::Fixed) return {{"model", "fixed"}, {"d", d.lo}};
    return {{"model", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
}

AdversarySpec adversary_from_json(const json& j) {
    require_object(j, "adversary");
    AdversarySpec a;
    for (const auto& [key, value] : j.items()) {
        if (key == "program") a.program = parse_adversary(get_as<std::string>(value, key));
        else if (key == "faulty") a.faulty = get_as<std::vector<ReplicaId>>(value, key);
        else if (key == "victims") a.victims = get_as<std::vector<ReplicaId>>(value, key);
        else if (key == "at_time") a.at_time = get_as<SimTime>(value, key);
        else if (key == "skip_seq") a.skip_seq = get_as<SeqNum>(value, key);
        else if (key == "rate") a.rate = get_as<double>(value, key);
        else if (key == "max_extra_delay") a.max_extra_delay = get_as<SimTime>(value, key);
        else throw ConfigInvalid("unknown key in adversary: " + key);
    }
    return a;
}

json adversary_to_json(const AdversarySpec& a) {
    return {{"program", to_string(a.program)}, {"faulty", a.faulty},     {"victims", a.victims},
            {"at_time", a.at_time},            {"skip_seq", a.skip_seq}, {"rate", a.rate},
            {"max_extra_delay", a.max_extra_delay}};
}

Partition partition_from_json(const json& j) {
    require_object(j, "partition");
    Partition p;
    for (const auto& [key, value] : j.items()) {
        if (key == "start") p.start = get_as<SimTime>(value, key);
        else if (key == "end") p.end = get_as<SimTime>(value, key);
        else if (key == "groups") p.groups = get_as<std::vector<std::vector<ReplicaId>>>(value, key);
        else throw ConfigInvalid("unknown key in partition: " + key);
    }
    return p;
}

} // namespace

std::string to_string(AdversaryKind kind) {
    for (const auto& [k, name] : kAdversaryNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

AdversaryKind parse_adversary(const std::string& text) {
    for (const auto& [k, name] : kAdversaryNames) {
        if (text == name) return k;
    }
    throw ConfigInvalid("unknown adversary program: " + text);
}

const std::vector<AdversaryKind>& all_adversaries() {
    static const std::vector<AdversaryKind> kinds = {
        AdversaryKind::Crash,   AdversaryKind::EquivocatingPrimary, AdversaryKind::DarkPrimary,
        AdversaryKind::SkipSeq, AdversaryKind::ForgeShares,         AdversaryKind::DelayLinks,
    };
    return kinds;
}

ReplicaConfig Scenario::replica_config(ReplicaId id) const {
    ReplicaConfig c;
    c.id = id;
    c.n = n;
    c.f = f;
    c.scheme = scheme;
    c.batch_size = batch_size;
    c.batch_flush = batch_flush;
    c.watermark_window = watermark_window;
    c.max_in_flight = max_in_flight;
    c.checkpoint_interval = checkpoint_interval;
    c.timeout_base = timeout_base;
    c.failure_detection = !latency_mode;
    c.result_padding = result_padding;
    return c;
}

void Scenario::validate() const {
    replica_config(0).validate();
    if (clients < 1) throw ConfigInvalid("need at least one client");
    if (key_space < 1) throw ConfigInvalid("key space must be at least 1");
    if (write_ratio < 0 || write_ratio > 1) throw ConfigInvalid("write ratio must be in [0, 1]");
    if (drop_rate < 0 || drop_rate >= 1) throw ConfigInvalid("drop rate must be in [0, 1)");
    if (delay.lo < 0 || delay.hi < delay.lo) throw ConfigInvalid("delay bounds must satisfy 0 <= lo <= hi");
    if (submit_interval < 0) throw ConfigInvalid("submit interval must be non-negative");
    if (client_timeout < 1) throw ConfigInvalid("client timeout must be positive");
    if (duration < 1) throw ConfigInvalid("duration must be positive");
    if (metrics_interval < 1) throw ConfigInvalid("metrics interval must be positive");
    if (drain < 0) throw ConfigInvalid("drain must be non-negative");

    std::set<ReplicaId> faulty(adversary.faulty.begin(), adversary.faulty.end());
    if (faulty.size() != adversary.faulty.size()) throw ConfigInvalid("duplicate faulty replica");
    if (faulty.size() > f) throw ConfigInvalid(fmt::format("adversary controls {} replicas but f={}", faulty.size(), f));
    for (ReplicaId r : faulty) {
        if (r >= n) throw ConfigInvalid(fmt::format("faulty replica {} out of range", r));
    }
    for (ReplicaId r : adversary.victims) {
        if (r >= n || faulty.contains(r)) throw ConfigInvalid(fmt::format("invalid dark victim {}", r));
    }
    if (adversary.victims.size() > f) throw ConfigInvalid("at most f replicas can be kept in the dark");
    if (adversary.rate < 0 || adversary.rate > 1) throw ConfigInvalid("adversary rate must be in [0, 1]");
    if (adversary.max_extra_delay < 0) throw ConfigInvalid("extra delay must be non-negative");
    switch (adversary.program) {
    case AdversaryKind::None:
    case AdversaryKind::DelayLinks:
        if (!faulty.empty()) throw ConfigInvalid("this adversary program controls no replicas");
        break;
    case AdversaryKind::EquivocatingPrimary:
    case AdversaryKind::DarkPrimary:
    case AdversaryKind::SkipSeq:
        if (!faulty.contains(0)) throw ConfigInvalid("this adversary program needs the initial primary (0) faulty");
        break;
    case AdversaryKind::Crash:
    case AdversaryKind::ForgeShares:
        if (faulty.empty()) throw ConfigInvalid("this adversary program needs at least one faulty replica");
        break;
    }
    for (const auto& p : partitions) {
        if (p.end < p.start) throw ConfigInvalid("partition ends before it starts");
        for (const auto& g : p.groups) {
            for (ReplicaId r : g) {
                if (r >= n) throw ConfigInvalid(fmt::format("partition member {} out of range", r));
            }
        }
    }
}

Scenario scenario_from_json(const json& j) {
    require_object(j, "scenario");
    Scenario s;
    for (const auto& [key, value] : j.items()) {
        if (key == "n") s.n = get_as<std::uint32_t>(value, key);
        else if (key == "f") s.f = get_as<std::uint32_t>(value, key);
        else if (key == "scheme") s.scheme = parse_scheme(get_as<std::string>(value, key));
        else if (key == "seed") s.seed = get_as<std::uint64_t>(value, key);
        else if (key == "batch_size") s.batch_size = get_as<std::size_t>(value, key);
        else if (key == "watermark_window") s.watermark_window = get_as<std::size_t>(value, key);
        else if (key == "checkpoint_interval") s.checkpoint_interval = get_as<std::size_t>(value, key);
        else if (key == "max_in_flight") s.max_in_flight = get_as<std::size_t>(value, key);
        else if (key == "timeout_base") s.timeout_base = get_as<SimTime>(value, key);
        else if (key == "client_timeout") s.client_timeout = get_as<SimTime>(value, key);
        else if (key == "batch_flush") s.batch_flush = get_as<SimTime>(value, key);
        else if (key == "clients") s.clients = get_as<std::uint32_t>(value, key);
        else if (key == "requests_per_client") s.requests_per_client = get_as<std::uint32_t>(value, key);
        else if (key == "submit_interval") s.submit_interval = get_as<SimTime>(value, key);
        else if (key == "key_space") s.key_space = get_as<std::uint32_t>(value, key);
        else if (key == "write_ratio") s.write_ratio = get_as<double>(value, key);
        else if (key == "command_padding") s.command_padding = get_as<std::size_t>(value, key);
        else if (key == "result_padding") s.result_padding = get_as<std::size_t>(value, key);
        else if (key == "delay") s.delay = delay_from_json(value);
        else if (key == "drop_rate") s.drop_rate = get_as<double>(value, key);
        else if (key == "partitions") {
            if (!value.is_array()) throw ConfigInvalid("partitions must be an array");
            for (const auto& p : value) s.partitions.push_back(partition_from_json(p));
        } else if (key == "adversary") s.adversary = adversary_from_json(value);
        else if (key == "duration") s.duration = get_as<SimTime>(value, key);
        else if (key == "decision_target") {
            if (value.is_null()) s.decision_target.reset();
            else s.decision_target = get_as<std::uint64_t>(value, key);
        } else if (key == "stop_when_committed") s.stop_when_committed = get_as<bool>(value, key);
        else if (key == "drain") s.drain = get_as<SimTime>(value, key);
        else if (key == "metrics_interval") s.metrics_interval = get_as<SimTime>(value, key);
        else if (key == "latency_mode") s.latency_mode = get_as<bool>(value, key);
        else if (key == "record_messages") s.record_messages = get_as<bool>(value, key);
        else if (key == "record_network") s.record_network = get_as<bool>(value, key);
        else throw ConfigInvalid("unknown scenario key: " + key);
    }
    s.validate();
    return s;
}

json to_json(const Scenario& s) {
    json partitions = json::array();
    for (const auto& p : s.partitions) {
        partitions.push_back({{"start", p.start}, {"end", p.end}, {"groups", p.groups}});
    }
    json j = {
        {"n", s.n},
        {"f", s.f},
        {"scheme", to_string(s.scheme)},
        {"seed", s.seed},
        {"batch_size", s.batch_size},
        {"watermark_window", s.watermark_window},
        {"checkpoint_interval", s.checkpoint_interval},
        {"max_in_flight", s.max_in_flight},
        {"timeout_base", s.timeout_base},
        {"client_timeout", s.client_timeout},
        {"batch_flush", s.batch_flush},
        {"clients", s.clients},
        {"requests_per_client", s.requests_per_client},
        {"submit_interval", s.submit_interval},
        {"key_space", s.key_space},
        {"write_ratio", s.write_ratio},
        {"command_padding", s.command_padding},
        {"result_padding", s.result_padding},
        {"delay", delay_to_json(s.delay)},
        {"drop_rate", s.drop_rate},
        {"partitions", partitions},
        {"adversary", adversary_to_json(s.adversary)},
        {"duration", s.duration},
        {"decision_target", s.decision_target ? json(*s.decision_target) : json(nullptr)},
        {"stop_when_committed", s.stop_when_committed},
        {"drain", s.drain},
        {"metrics_interval", s.metrics_interval},
        {"latency_mode", s.latency_mode},
        {"record_messages", s.record_messages},
        {"record_network", s.record_network},
    };
    return j;
}

Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigInvalid(std::string("scenario is not valid JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

} // namespace poe
