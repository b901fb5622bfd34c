#include "qosip/simulator.hpp"

#include <sstream>

namespace qosip {

CbrPlan cbr_schedule(const ConnectionSpec& spec, std::int64_t accept_time_us)
{
    CbrPlan plan;
    plan.interval_us = std::max<std::int64_t>(1, spec.pkt_bytes * 8'000 / spec.cbr_kbps);
    for (std::int64_t offset = 0; offset < spec.duration_us; offset += plan.interval_us) {
        plan.packet_times_us.push_back(accept_time_us + offset);
    }
    plan.teardown_us = accept_time_us + spec.duration_us;
    return plan;
}

std::int64_t RunResult::reserved_total() const
{
    std::int64_t n = 0;
    for (const auto& [id, m] : final_links) {
        n += m.reserved_kbps;
    }
    return n;
}

// ---------------------------------------------------------------------------

Simulator::Simulator(Topology topology, SimConfig config)
    : topology_(std::move(topology)), config_(config)
{
    topology_.validate();
    if (config_.baseline == BaselineMode::SourceRouting) {
        config_.protocol.exchange_updates = false;
    }

    std::map<RouterId, std::vector<LocalLink>> attached;
    for (const auto& l : topology_.links) {
        links_[l.id] = l.metrics;
        link_versions_[l.id] = 0;
        attached[l.a].push_back(LocalLink{l.id, l.b, l.metrics});
        attached[l.b].push_back(LocalLink{l.id, l.a, l.metrics});
    }
    for (RouterId r : topology_.routers) {
        routers_.emplace(r, make_router(r, attached[r], config_.protocol));
        result_.counters.routers[r] = RouterCounters{};
    }
    if (config_.baseline == BaselineMode::SourceRouting) {
        // Source routing starts from full topology knowledge; only metric
        // changes are flooded.
        LinkStateDb initial;
        for (const auto& l : topology_.links) {
            initial.apply(LinkStateAdvert{l.id, l.a, l.b, l.metrics, 0});
        }
        for (RouterId r : topology_.routers) {
            lsdb_[r] = initial;
        }
    }
}

void Simulator::boot()
{
    for (RouterId r : topology_.routers) {
        schedule(0, r, BootEvent{});
    }
}

void Simulator::add_connection(const ConnectionSpec& spec)
{
    if (!topology_.has_router(spec.src) || !topology_.has_router(spec.dst)) {
        throw ScenarioError("connection " + std::to_string(spec.conn.value) +
                            " references an unknown router");
    }
    if (!specs_.emplace(spec.conn, spec).second) {
        throw ScenarioError("duplicate connection id " + std::to_string(spec.conn.value));
    }
    schedule(spec.start_us, spec.src, StartEvent{spec.conn});
}

void Simulator::add_scenario(const Scenario& scenario)
{
    scenario.validate(topology_);
    for (const auto& c : scenario.connections) {
        add_connection(c);
    }
}

void Simulator::schedule(std::int64_t at_us, RouterId target, Payload payload)
{
    if (at_us < now_us_) {
        throw InvariantViolation("event scheduled in the past");
    }
    queue_.emplace(Key{at_us, next_seq_++}, Event{target, std::move(payload)});
}

bool Simulator::step()
{
    if (queue_.empty() || queue_.begin()->first.first > config_.max_time_us) {
        return false;
    }
    auto node = queue_.extract(queue_.begin());
    now_us_ = node.key().first;
    current_seq_ = node.key().second;
    ++result_.counters.routers[node.mapped().target].events;
    handle(node.mapped().target, node.mapped().payload);
    return true;
}

void Simulator::run_all()
{
    while (step()) {
    }
}

void Simulator::inject(RouterId from, RouterId to, LinkId link, Message msg)
{
    send(from, to, link, std::move(msg));
}

const RouterState& Simulator::router(RouterId id) const
{
    return routers_.at(id);
}

RouterState& Simulator::router_mut(RouterId id)
{
    return routers_.at(id);
}

const LinkMetrics& Simulator::link(LinkId id) const
{
    return links_.at(id);
}

const LinkStateDb& Simulator::link_state_db(RouterId id) const
{
    return lsdb_.at(id);
}

RunResult Simulator::result() const
{
    RunResult out = result_;
    out.final_links = links_;
    out.end_time_us = now_us_;
    out.drained = queue_.empty();
    return out;
}

TraceRecord Simulator::record(TraceKind kind, RouterId router) const
{
    TraceRecord r;
    r.time_us = now_us_;
    r.seq = current_seq_;
    r.kind = kind;
    r.router = router;
    return r;
}

void Simulator::trace(TraceRecord record)
{
    if (config_.record_trace) {
        result_.trace.records.push_back(std::move(record));
    }
}

// ---------------------------------------------------------------------------

void Simulator::handle(RouterId target, Payload& payload)
{
    auto& state = routers_.at(target);
    std::visit(
        [&](auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, BootEvent>) {
                apply(target, emit_hellos(state));
            } else if constexpr (std::is_same_v<T, StartEvent>) {
                const auto& spec = specs_.at(ev.conn);
                result_.counters.connections[ev.conn] =
                    ConnectionRecord{spec.conn, spec.src, spec.dst, Outcome::Pending, {}, {}};
                auto tr = record(TraceKind::Timer, target);
                tr.conn = ev.conn;
                trace(tr);
                if (config_.baseline == BaselineMode::SourceRouting) {
                    SearchStats stats;
                    const auto route =
                        dijkstra_feasible(lsdb_.at(target), spec.src, spec.dst, spec.qos, &stats);
                    ++result_.counters.routers[target].computations;
                    apply(target, start_source_routed(state, spec.conn, spec.dst, spec.qos, route));
                } else {
                    apply(target, start_connection(state, spec.conn, spec.dst, spec.qos));
                }
            } else if constexpr (std::is_same_v<T, MessageEvent>) {
                auto tr = record(TraceKind::Receive, target);
                tr.peer = ev.from;
                tr.link = ev.link;
                tr.message = ev.msg.kind();
                tr.conn = ev.msg.conn();
                if (const auto* p = ev.msg.path()) {
                    tr.path = p->hops;
                }
                tr.value = now_us_ - ev.sent_us;
                trace(tr);
                if (ev.msg.kind() == MessageKind::LinkState) {
                    bool applied = false;
                    auto sends = ls_receive(target, state.nt, lsdb_.at(target),
                                            ev.msg.template as<LinkStateMsg>(), ev.from, applied);
                    if (applied) {
                        ++result_.counters.routers[target].computations;
                    }
                    for (auto& s : sends) {
                        send(target, s.to, s.link, Message{std::move(s.msg)});
                    }
                } else {
                    apply(target, dispatch(state, ev.msg, ev.from, ev.link));
                }
            } else if constexpr (std::is_same_v<T, TimerEvent>) {
                auto tr = record(TraceKind::Timer, target);
                tr.conn = ev.conn;
                tr.value = ev.kind == TimerKind::ProbeTimeout ? 1 : 2;
                trace(tr);
                if (ev.kind == TimerKind::ProbeTimeout) {
                    apply(target, probe_timeout(state, ev.conn));
                } else {
                    if (auto it = state.collecting.find(ev.conn); it != state.collecting.end()) {
                        result_.candidates[ev.conn] = it->second.candidates;
                        if (!it->second.candidates.empty()) {
                            ++result_.counters.routers[target].computations;
                        }
                    }
                    apply(target, collect_and_ack(state, ev.conn));
                }
            } else if constexpr (std::is_same_v<T, DataSourceEvent>) {
                const auto& spec = specs_.at(ev.conn);
                if (ev.teardown) {
                    apply(target, dispatch(state, Message{TeardownMsg{ev.conn}}, target, std::nullopt));
                } else {
                    result_.counters.data_bytes_originated += spec.pkt_bytes;
                    apply(target, dispatch(state, Message{DataMsg{ev.conn, spec.pkt_bytes}}, target,
                                           std::nullopt));
                }
            }
        },
        payload);
}

void Simulator::send(RouterId from, RouterId to, LinkId link, Message msg)
{
    const auto* l = topology_.find_link(link);
    if (l == nullptr || !((l->a == from && l->b == to) || (l->b == from && l->a == to))) {
        std::ostringstream os;
        os << "router " << from << " sent " << to_string(msg.kind()) << " to " << to
           << " over link " << link << " which does not join them";
        throw InvariantViolation(os.str());
    }
    result_.counters.count_send(msg);
    auto tr = record(TraceKind::Send, from);
    tr.peer = to;
    tr.link = link;
    tr.message = msg.kind();
    tr.conn = msg.conn();
    if (const auto* p = msg.path()) {
        tr.path = p->hops;
    }
    tr.value = nominal_bytes(msg);
    trace(tr);
    schedule(now_us_ + links_.at(link).delay_ms * 1000, to, MessageEvent{from, link, std::move(msg), now_us_});
}

void Simulator::change_link(RouterId actor, LinkId link, std::int64_t delta_kbps, ConnectionId conn)
{
    auto& m = links_.at(link);
    const auto reserved = m.reserved_kbps + delta_kbps;
    if (reserved > m.capacity_kbps || reserved < 0) {
        std::ostringstream os;
        os << "link " << link << " reservation would become " << reserved << " of capacity "
           << m.capacity_kbps << " (connection " << conn << ")";
        throw InvariantViolation(os.str());
    }
    m.reserved_kbps = reserved;
    const auto version = ++link_versions_.at(link);

    auto tr = record(delta_kbps > 0 ? TraceKind::Reserve : TraceKind::Release, actor);
    tr.link = link;
    tr.conn = conn;
    tr.value = delta_kbps > 0 ? delta_kbps : -delta_kbps;
    trace(tr);

    const auto* l = topology_.find_link(link);
    const LinkMetrics now = m;
    for (RouterId endpoint : {l->a, l->b}) {
        apply(endpoint, local_link_changed(routers_.at(endpoint), link, now));
    }
    if (config_.baseline == BaselineMode::SourceRouting) {
        ++result_.counters.routers[actor].floods_initiated;
        auto sends = ls_originate(actor, routers_.at(actor).nt, lsdb_.at(actor),
                                  LinkStateAdvert{link, l->a, l->b, now, version}, true);
        for (auto& s : sends) {
            send(actor, s.to, s.link, Message{std::move(s.msg)});
        }
    }
}

void Simulator::apply(RouterId actor, Actions actions)
{
    for (auto& action : actions) {
        std::visit(
            [&](auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, SendAction>) {
                    send(actor, a.to, a.link, std::move(a.msg));
                } else if constexpr (std::is_same_v<T, DeliverAction>) {
                    result_.throughput.add(actor, now_us_, a.bytes);
                    auto tr = record(TraceKind::Deliver, actor);
                    tr.conn = a.conn;
                    tr.value = a.bytes;
                    trace(tr);
                } else if constexpr (std::is_same_v<T, ReserveAction>) {
                    change_link(actor, a.link, a.kbps, a.conn);
                } else if constexpr (std::is_same_v<T, ReleaseAction>) {
                    change_link(actor, a.link, -a.kbps, a.conn);
                } else if constexpr (std::is_same_v<T, AcceptCallAction>) {
                    auto& rec = result_.counters.connections[a.conn];
                    auto tr = record(TraceKind::Accept, actor);
                    tr.conn = a.conn;
                    tr.path = a.path.hops;
                    trace(tr);
                    if (rec.outcome != Outcome::Pending) {
                        return;
                    }
                    const auto& spec = specs_.at(a.conn);
                    rec.outcome = Outcome::Accepted;
                    rec.path = a.path;
                    rec.setup_us = now_us_ - spec.start_us;
                    const auto plan = cbr_schedule(spec, now_us_);
                    for (auto t : plan.packet_times_us) {
                        schedule(t, actor, DataSourceEvent{a.conn, false});
                    }
                    schedule(plan.teardown_us, actor, DataSourceEvent{a.conn, true});
                } else if constexpr (std::is_same_v<T, BlockCallAction>) {
                    auto& rec = result_.counters.connections[a.conn];
                    auto tr = record(TraceKind::Block, actor);
                    tr.conn = a.conn;
                    tr.value = static_cast<std::int64_t>(a.reason);
                    trace(tr);
                    if (rec.outcome == Outcome::Pending) {
                        rec.outcome = a.reason == BlockReason::AckPhaseFailure ? Outcome::Failed
                                                                               : Outcome::Blocked;
                    }
                } else if constexpr (std::is_same_v<T, ArmTimerAction>) {
                    schedule(now_us_ + a.delay_us, actor, TimerEvent{a.kind, a.conn});
                } else if constexpr (std::is_same_v<T, DropDataAction>) {
                    result_.counters.data_bytes_dropped += a.bytes;
                    ++result_.counters.data_packets_dropped;
                    auto tr = record(TraceKind::Drop, actor);
                    tr.conn = a.conn;
                    tr.value = a.bytes;
                    trace(tr);
                }
            },
            action);
    }
}

// ---------------------------------------------------------------------------

std::vector<std::string> Simulator::snt_consistency_errors() const
{
    std::vector<std::string> errors;
    auto complain = [&errors](RouterId owner, const std::string& what) {
        std::ostringstream os;
        os << "router " << owner << ": " << what;
        errors.push_back(os.str());
    };

    for (const auto& [owner, state] : routers_) {
        // Expected keys: (n, m) for every neighbor n and every neighbor m of n other than owner.
        std::set<SecondNeighborTable::Key> expected;
        for (RouterId n : state.nt.neighbors()) {
            for (RouterId m : routers_.at(n).nt.neighbors()) {
                if (m != owner) {
                    expected.insert({n, m});
                }
            }
        }
        for (const auto& key : expected) {
            if (!state.snt.rows().contains(key)) {
                complain(owner, "missing second neighbor " + std::to_string(key.second.value) +
                                    " via " + std::to_string(key.first.value));
            }
        }
        for (const auto& [key, row] : state.snt.rows()) {
            if (!expected.contains(key)) {
                complain(owner, "stale second neighbor " + std::to_string(key.second.value) +
                                    " via " + std::to_string(key.first.value));
                continue;
            }
            const auto* first = state.nt.widest_link_to(key.first);
            const auto* second = routers_.at(key.first).nt.widest_link_to(key.second);
            if (row.entry.agg_delay_ms != first->metrics.delay_ms + second->metrics.delay_ms) {
                complain(owner, "aggregate delay mismatch");
            }
            if (row.entry.agg_bottleneck_kbps !=
                std::min(first->metrics.residual_kbps(), row.advertised_residual_kbps)) {
                complain(owner, "aggregate bottleneck mismatch");
            }
            const auto policy = config_.protocol.policy;
            const bool exact = config_.protocol.trigger_mode == TriggerMode::EveryChange;
            const auto actual = second->metrics.residual_kbps();
            if (exact ? row.advertised_residual_kbps != actual
                      : class_of(row.advertised_residual_kbps, policy) != class_of(actual, policy)) {
                complain(owner, "advertised residual out of date beyond its class");
            }
        }
    }
    return errors;
}

RunResult run_simulation(const Topology& topology, const Scenario& scenario,
                         const SimConfig& config)
{
    Simulator sim(topology, config);
    sim.boot();
    sim.add_scenario(scenario);
    sim.run_all();
    return sim.result();
}

}  // namespace qosip
