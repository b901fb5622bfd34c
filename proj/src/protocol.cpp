#include "qosip/protocol.hpp"

#include <algorithm>
#include <sstream>

namespace qosip {

namespace {

std::vector<NtEntry> eligible_links_to(const RouterState& state, RouterId neighbor,
                                       const QosRequest& qos, std::int64_t accumulated)
{
    std::vector<NtEntry> out;
    for (const auto& e : state.nt.links_to(neighbor)) {
        if (e.metrics.residual_kbps() >= qos.bandwidth_kbps &&
            qos.admits_delay(accumulated + e.metrics.delay_ms)) {
            out.push_back(e);
        }
    }
    return out;
}

NtEntry pick(const RouterState& state, const std::vector<NtEntry>& links, const QosRequest& qos)
{
    return choose_link(links, qos, state.options.policy, state.options.link_choice);
}

/// Control traffic to a neighbor; appended to `out` only if the neighbor is known.
void send_control(const RouterState& state, RouterId to, Message msg, Actions& out)
{
    if (const auto* link = state.nt.control_link_to(to)) {
        out.push_back(SendAction{to, link->link, std::move(msg)});
    }
}

Actions broadcast_update(const RouterState& state, bool triggered)
{
    Actions out;
    if (state.nt.empty()) {
        return out;
    }
    const Message update = build_update(state.id, state.nt, triggered);
    for (RouterId n : state.nt.neighbors()) {
        send_control(state, n, update, out);
    }
    return out;
}

void emit_probes(const ProbeMsg& templ, const ForwardPlan& plan,
                 Actions& out)
{
    for (const auto& target : plan.targets) {
        out.push_back(SendAction{target.neighbor, target.link, Message{templ}});
    }
}

std::string describe(RouterId id, ConnectionId conn)
{
    std::ostringstream os;
    os << "router " << id << " connection " << conn;
    return os.str();
}

}  // namespace

RouterState make_router(RouterId id, std::vector<LocalLink> interfaces, ProtocolOptions options)
{
    RouterState s;
    s.id = id;
    s.interfaces = std::move(interfaces);
    s.options = options;
    return s;
}

// ---------------------------------------------------------------------------

Actions emit_hellos(RouterState& state)
{
    Actions out;
    for (const auto& l : state.interfaces) {
        if (state.greeted_links.insert(l.link).second) {
            out.push_back(SendAction{l.peer, l.link, build_hello(state.id)});
        }
    }
    return out;
}

Actions handle_hello(RouterState& state, const HelloMsg& hello, RouterId from, LinkId link)
{
    auto it = std::find_if(state.interfaces.begin(), state.interfaces.end(),
                           [link](const LocalLink& l) { return l.link == link; });
    if (it == state.interfaces.end() || it->peer != from || hello.origin != from) {
        return {};
    }
    if (state.nt.find(link) != nullptr) {
        return {};
    }
    state.nt.upsert(NtEntry{link, from, it->metrics});
    if (!state.options.exchange_updates) {
        return {};
    }
    // The neighbor set changed: advertise the new snapshot.
    return broadcast_update(state, false);
}

Actions handle_update(RouterState& state, const UpdateMsg& update, RouterId from)
{
    const NtEntry* via = state.nt.widest_link_to(from);
    if (via == nullptr) {
        std::ostringstream os;
        os << "router " << state.id << " got an update from non-neighbor " << from;
        throw UnknownNeighbor(os.str());
    }
    state.snt = apply_update(state.snt, state.nt, from, via->link, via->metrics, update, state.id);
    return {};
}

Actions local_link_changed(RouterState& state, LinkId link, const LinkMetrics& now)
{
    const NtEntry* entry = state.nt.find(link);
    if (entry == nullptr) {
        return {};
    }
    const auto old_residual = entry->metrics.residual_kbps();
    const RouterId neighbor = entry->neighbor;
    state.nt.set_metrics(link, now);
    state.snt.refresh_first_hop(neighbor, *state.nt.widest_link_to(neighbor));

    if (!state.options.exchange_updates ||
        !should_trigger(old_residual, now.residual_kbps(), state.options.policy,
                        state.options.trigger_mode)) {
        return {};
    }
    return broadcast_update(state, true);
}

// ---------------------------------------------------------------------------

ForwardPlan plan_forwarding(const RouterState& state, RouterId destination,
                            const QosRequest& qos, const PathRecord& path)
{
    ForwardPlan plan;
    const auto acc = path.total_delay_ms;

    if (destination == state.id) {
        plan.rule = ForwardRule::Destination;
        return plan;
    }

    if (state.nt.has_neighbor(destination)) {
        plan.rule = ForwardRule::NeighborHit;
        auto links = eligible_links_to(state, destination, qos, acc);
        if (!links.empty() && !path.contains(destination)) {
            plan.targets.push_back(pick(state, links, qos));
        } else {
            plan.nack = true;
        }
        return plan;
    }

    auto add_target = [&](RouterId n) {
        if (path.contains(n)) {
            return;
        }
        if (std::any_of(plan.targets.begin(), plan.targets.end(),
                        [n](const NtEntry& t) { return t.neighbor == n; })) {
            return;
        }
        auto links = eligible_links_to(state, n, qos, acc);
        if (!links.empty()) {
            plan.targets.push_back(pick(state, links, qos));
        }
    };

    if (state.snt.has_second(destination)) {
        plan.rule = ForwardRule::SecondNeighborHit;
        for (const auto& e : eligible_two_hop(state.snt, destination, qos, acc, state.options.policy)) {
            add_target(e.neighbor);
        }
        plan.nack = plan.targets.empty();
        return plan;
    }

    // Destination beyond two hops: flood toward neighbors that lead to at
    // least one second neighbor over an eligible aggregate.
    plan.rule = ForwardRule::Flood;
    for (const auto& first : eligible_first_hops(state.nt, qos, acc, state.options.policy)) {
        const auto via = state.snt.via(first.neighbor);
        const bool leads_on = std::any_of(via.begin(), via.end(), [&](const SntEntry& e) {
            return e.agg_bottleneck_kbps >= qos.bandwidth_kbps &&
                   qos.admits_delay(acc + e.agg_delay_ms);
        });
        if (leads_on) {
            add_target(first.neighbor);
        }
    }
    return plan;
}

namespace {

Actions open_session(RouterState& state, ConnectionId conn, RouterId destination,
                     const QosRequest& qos)
{
    if (state.reservations.contains(conn) || state.sessions.contains(conn)) {
        throw AlreadyActive(describe(state.id, conn) + " is already active");
    }
    state.sessions[conn] = SourceSession{destination, qos, SourcePhase::Probing, 0};
    Actions out;
    if (destination == state.id) {
        state.reservations[conn] =
            ReservationEntry{std::nullopt, std::nullopt, std::nullopt, 0, ReservationPhase::Active};
        state.sessions[conn].phase = SourcePhase::Accepted;
        out.push_back(AcceptCallAction{conn, seed_path(state.id)});
    }
    return out;
}

}  // namespace

Actions start_connection(RouterState& state, ConnectionId conn, RouterId destination,
                         const QosRequest& qos)
{
    Actions out = open_session(state, conn, destination, qos);
    if (!out.empty()) {
        return out;
    }
    ProbeMsg probe{conn, destination, qos, seed_path(state.id), std::nullopt};
    const auto plan = plan_forwarding(state, destination, qos, probe.path);
    emit_probes(probe, plan, out);
    if (state.options.suppress_duplicates) {
        state.probe_cache.insert(conn);
    }
    out.push_back(ArmTimerAction{TimerKind::ProbeTimeout, conn, state.options.probe_timeout_us});
    return out;
}

Actions start_source_routed(RouterState& state, ConnectionId conn, RouterId destination,
                            const QosRequest& qos, const std::optional<PathRecord>& route)
{
    Actions out = open_session(state, conn, destination, qos);
    if (!out.empty()) {
        return out;
    }
    auto block = [&] {
        state.sessions[conn].phase = SourcePhase::Blocked;
        out.push_back(BlockCallAction{conn, BlockReason::NoRoute});
        return out;
    };
    if (!route || route->hops.size() < 2 || route->hops.front() != state.id ||
        route->hops.back() != destination) {
        return block();
    }
    const auto links = eligible_links_to(state, route->hops[1], qos, 0);
    if (links.empty()) {
        return block();
    }
    ProbeMsg probe{conn, destination, qos, seed_path(state.id), route->hops};
    out.push_back(SendAction{route->hops[1], pick(state, links, qos).link, Message{probe}});
    out.push_back(ArmTimerAction{TimerKind::ProbeTimeout, conn, state.options.probe_timeout_us});
    return out;
}

Actions handle_probe(RouterState& state, const ProbeMsg& probe, RouterId arrived_from,
                     LinkId arrived_link)
{
    const NtEntry* in = state.nt.find(arrived_link);
    if (in == nullptr || in->neighbor != arrived_from) {
        return {};
    }
    PathRecord path;
    try {
        path = extend_path(probe.path, in->metrics, state.id);
    } catch (const LoopDetected&) {
        return {};
    }

    Actions out;
    if (probe.destination == state.id) {
        auto [it, fresh] = state.collecting.try_emplace(probe.conn, CollectSession{probe.qos, {}, false});
        auto& session = it->second;
        if (session.closed) {
            return out;
        }
        const bool seen = std::any_of(session.candidates.begin(), session.candidates.end(),
                                      [&](const PathRecord& p) { return p.hops == path.hops; });
        if (!seen) {
            session.candidates.push_back(std::move(path));
        }
        if (fresh) {
            out.push_back(ArmTimerAction{TimerKind::CollectWindow, probe.conn,
                                         state.options.collect_window_us});
        }
        return out;
    }

    if (state.options.suppress_duplicates && state.probe_cache.contains(probe.conn)) {
        return out;
    }

    ProbeMsg next = probe;
    next.path = path;
    bool nack = false;

    if (probe.explicit_route) {
        const auto& route = *probe.explicit_route;
        auto pos = std::find(route.begin(), route.end(), state.id);
        if (pos == route.end() || pos + 1 == route.end()) {
            return out;
        }
        const RouterId hop = *(pos + 1);
        auto links = eligible_links_to(state, hop, probe.qos, path.total_delay_ms);
        if (links.empty() || path.contains(hop)) {
            nack = true;
        } else {
            out.push_back(SendAction{hop, pick(state, links, probe.qos).link, Message{next}});
        }
    } else {
        const auto plan = plan_forwarding(state, probe.destination, probe.qos, path);
        emit_probes(next, plan, out);
        nack = plan.nack;
    }

    if (nack) {
        send_control(state, arrived_from, Message{NackMsg{probe.conn, path, false}}, out);
    } else if (!out.empty() && state.options.suppress_duplicates) {
        state.probe_cache.insert(probe.conn);
    }
    return out;
}

Actions collect_and_ack(RouterState& state, ConnectionId conn)
{
    auto it = state.collecting.find(conn);
    if (it == state.collecting.end() || it->second.closed) {
        return {};
    }
    auto& session = it->second;
    session.closed = true;
    const auto best = select_best(CandidateSet{conn, session.qos, session.candidates, 0});
    if (!best || best->hops.size() < 2) {
        return {};
    }
    const RouterId upstream = best->hops[best->hops.size() - 2];
    state.reservations[conn] =
        ReservationEntry{upstream, std::nullopt, std::nullopt, 0, ReservationPhase::Active};
    Actions out;
    send_control(state, upstream, Message{AckMsg{conn, session.qos, *best}}, out);
    return out;
}

Actions handle_ack(RouterState& state, const AckMsg& ack, RouterId arrived_from)
{
    const auto pos = ack.path.position_of(state.id);
    if (!pos || *pos + 1 >= ack.path.hops.size() || ack.path.hops[*pos + 1] != arrived_from) {
        std::ostringstream os;
        os << "ack for connection " << ack.conn << " reached router " << state.id << " from "
           << arrived_from << " but path is " << format_hops(ack.path.hops);
        throw PathMismatch(os.str());
    }
    const bool at_source = *pos == 0;
    Actions out;

    if (at_source) {
        auto s = state.sessions.find(ack.conn);
        if (s != state.sessions.end() && s->second.phase != SourcePhase::Probing) {
            // The call was already given up on; undo whatever the walk reserved.
            send_control(state, arrived_from, Message{TeardownMsg{ack.conn}}, out);
            return out;
        }
    }
    if (state.reservations.contains(ack.conn)) {
        return out;
    }

    // Nothing is reserved here for this connection yet, so the current
    // residual is exactly what the request competes for.
    const auto links = eligible_links_to(state, arrived_from, ack.qos, 0);
    if (!links.empty()) {
        const NtEntry link = pick(state, links, ack.qos);
        out.push_back(ReserveAction{link.link, ack.qos.bandwidth_kbps, ack.conn});
        state.reservations[ack.conn] = ReservationEntry{
            at_source ? std::nullopt : std::optional<RouterId>{ack.path.hops[*pos - 1]},
            arrived_from, link.link, ack.qos.bandwidth_kbps, ReservationPhase::Active};
        if (at_source) {
            if (auto s = state.sessions.find(ack.conn); s != state.sessions.end()) {
                s->second.phase = SourcePhase::Accepted;
            }
            out.push_back(AcceptCallAction{ack.conn, ack.path});
        } else {
            send_control(state, ack.path.hops[*pos - 1], Message{ack}, out);
        }
        return out;
    }

    send_control(state, arrived_from, Message{FailureMsg{ack.conn, ack.path}}, out);
    if (at_source) {
        if (auto s = state.sessions.find(ack.conn); s != state.sessions.end()) {
            s->second.phase = SourcePhase::Failed;
        }
        out.push_back(BlockCallAction{ack.conn, BlockReason::AckPhaseFailure});
    } else {
        send_control(state, ack.path.hops[*pos - 1], Message{NackMsg{ack.conn, ack.path, true}},
                     out);
    }
    return out;
}

Actions handle_nack(RouterState& state, const NackMsg& nack)
{
    const auto pos = nack.path.position_of(state.id);
    if (!pos) {
        return {};
    }
    Actions out;
    if (*pos > 0) {
        send_control(state, nack.path.hops[*pos - 1], Message{nack}, out);
        return out;
    }
    auto s = state.sessions.find(nack.conn);
    if (s == state.sessions.end() || s->second.phase != SourcePhase::Probing) {
        return out;
    }
    if (!nack.ack_phase) {
        // Other probe branches may still succeed; the timeout decides.
        ++s->second.nacks_seen;
        return out;
    }
    s->second.phase = SourcePhase::Failed;
    out.push_back(BlockCallAction{nack.conn, BlockReason::AckPhaseFailure});
    return out;
}

namespace {

/// Releases the entry for `conn` and reports the downstream hop, if any.
std::optional<std::pair<RouterId, LinkId>> release_entry(RouterState& state, ConnectionId conn,
                                                         Actions& out)
{
    auto it = state.reservations.find(conn);
    if (it == state.reservations.end() || it->second.phase == ReservationPhase::Released) {
        return std::nullopt;
    }
    auto& entry = it->second;
    if (entry.link_to_downstream && entry.reserved_kbps > 0) {
        out.push_back(ReleaseAction{*entry.link_to_downstream, entry.reserved_kbps, conn});
    }
    entry.phase = ReservationPhase::Released;
    if (entry.downstream && entry.link_to_downstream) {
        return std::make_pair(*entry.downstream, *entry.link_to_downstream);
    }
    return std::nullopt;
}

}  // namespace

Actions handle_failure(RouterState& state, const FailureMsg& failure)
{
    Actions out;
    if (auto next = release_entry(state, failure.conn, out)) {
        out.push_back(SendAction{next->first, next->second, Message{failure}});
    }
    return out;
}

Actions handle_teardown(RouterState& state, const TeardownMsg& teardown)
{
    Actions out;
    if (auto next = release_entry(state, teardown.conn, out)) {
        out.push_back(SendAction{next->first, next->second, Message{teardown}});
    }
    return out;
}

Actions handle_data(RouterState& state, const DataMsg& data)
{
    auto it = state.reservations.find(data.conn);
    if (it == state.reservations.end() || it->second.phase != ReservationPhase::Active) {
        return {DropDataAction{data.conn, data.payload_bytes}};
    }
    const auto& entry = it->second;
    if (!entry.downstream) {
        return {DeliverAction{data.conn, data.payload_bytes}};
    }
    return {SendAction{*entry.downstream, *entry.link_to_downstream, Message{data}}};
}

Actions probe_timeout(RouterState& state, ConnectionId conn)
{
    auto s = state.sessions.find(conn);
    if (s == state.sessions.end() || s->second.phase != SourcePhase::Probing) {
        return {};
    }
    s->second.phase = SourcePhase::Blocked;
    return {BlockCallAction{conn, BlockReason::ProbeTimeout}};
}

Actions dispatch(RouterState& state, const Message& msg, RouterId from,
                 std::optional<LinkId> arrived_link)
{
    return std::visit(
        [&](const auto& m) -> Actions {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, HelloMsg>) {
                return arrived_link ? handle_hello(state, m, from, *arrived_link) : Actions{};
            } else if constexpr (std::is_same_v<T, UpdateMsg>) {
                return state.options.exchange_updates ? handle_update(state, m, from) : Actions{};
            } else if constexpr (std::is_same_v<T, ProbeMsg>) {
                return arrived_link ? handle_probe(state, m, from, *arrived_link) : Actions{};
            } else if constexpr (std::is_same_v<T, AckMsg>) {
                return handle_ack(state, m, from);
            } else if constexpr (std::is_same_v<T, NackMsg>) {
                return handle_nack(state, m);
            } else if constexpr (std::is_same_v<T, FailureMsg>) {
                return handle_failure(state, m);
            } else if constexpr (std::is_same_v<T, TeardownMsg>) {
                return handle_teardown(state, m);
            } else if constexpr (std::is_same_v<T, DataMsg>) {
                return handle_data(state, m);
            } else {
                // Link-state adverts belong to the baseline and are handled by the engine.
                return Actions{};
            }
        },
        msg.body);
}

}  // namespace qosip
