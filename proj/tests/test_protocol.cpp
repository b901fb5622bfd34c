#include "qosip/protocol.hpp"

#include <doctest.h>

#include <tuple>

using namespace qosip;

namespace {

struct Port {
    std::uint32_t link;
    std::uint32_t peer;
    std::int64_t delay_ms;
    std::int64_t capacity_kbps;
};

/// Router whose NT already holds every attached link (HELLOs done).
RouterState router(std::uint32_t id, std::vector<Port> ports, ProtocolOptions opts = {})
{
    std::vector<LocalLink> ifs;
    for (const auto& p : ports) {
        ifs.push_back({LinkId{p.link}, RouterId{p.peer}, LinkMetrics{p.delay_ms, p.capacity_kbps, 0}});
    }
    auto s = make_router(RouterId{id}, ifs, opts);
    for (const auto& l : ifs) {
        s.greeted_links.insert(l.link);
        s.nt.upsert(NtEntry{l.link, l.peer, l.metrics});
    }
    return s;
}

/// Teaches `s` that `via` reaches `second` over a (delay, capacity) link.
void learn(RouterState& s, std::uint32_t via, std::vector<std::tuple<std::uint32_t, std::int64_t, std::int64_t>> seconds)
{
    UpdateMsg u{RouterId{via}, {}, false};
    for (auto [r, d, c] : seconds) {
        u.advertised_neighbors.push_back({RouterId{r}, LinkMetrics{d, c, 0}});
    }
    handle_update(s, u, RouterId{via});
}

PathRecord path_of(std::vector<std::uint32_t> hops, std::int64_t delay = 0, std::int64_t bottleneck = 1000)
{
    PathRecord p;
    for (auto h : hops) {
        p.hops.push_back(RouterId{h});
    }
    p.total_delay_ms = delay;
    if (hops.size() > 1) {
        p.bottleneck_kbps = bottleneck;
    }
    return p;
}

template <class T>
std::vector<T> only(const Actions& actions)
{
    std::vector<T> out;
    for (const auto& a : actions) {
        if (const auto* x = std::get_if<T>(&a)) {
            out.push_back(*x);
        }
    }
    return out;
}

std::vector<SendAction> sends_of(const Actions& actions, MessageKind kind)
{
    std::vector<SendAction> out;
    for (const auto& s : only<SendAction>(actions)) {
        if (s.msg.kind() == kind) {
            out.push_back(s);
        }
    }
    return out;
}

const QosRequest kReq{100, std::nullopt};
const ConnectionId kConn{1};

}  // namespace

TEST_CASE("emit_hellos greets each attached link once")
{
    std::vector<LocalLink> ifs{{LinkId{0}, RouterId{1}, LinkMetrics{1, 100, 0}},
                               {LinkId{1}, RouterId{2}, LinkMetrics{1, 100, 0}}};
    auto a = make_router(RouterId{0}, ifs, {});
    const auto first = emit_hellos(a);
    REQUIRE(first.size() == 2);
    for (const auto& s : only<SendAction>(first)) {
        CHECK(s.msg.kind() == MessageKind::Hello);
        CHECK(s.msg.as<HelloMsg>().origin == RouterId{0});
    }
    auto lone = make_router(RouterId{5}, {}, {});
    CHECK(emit_hellos(lone).empty());

    a.interfaces.push_back({LinkId{7}, RouterId{3}, LinkMetrics{1, 100, 0}});
    const auto again = only<SendAction>(emit_hellos(a));
    REQUIRE(again.size() == 1);
    CHECK(again[0].link == LinkId{7});
}

TEST_CASE("handle_hello adds the neighbor and advertises the new NT")
{
    std::vector<LocalLink> ifs{{LinkId{0}, RouterId{1}, LinkMetrics{5, 300, 0}}};
    auto a = make_router(RouterId{0}, ifs, {});
    const auto out = handle_hello(a, HelloMsg{RouterId{1}}, RouterId{1}, LinkId{0});
    CHECK(a.nt.has_neighbor(RouterId{1}));
    const auto updates = sends_of(out, MessageKind::Update);
    REQUIRE(updates.size() == 1);
    CHECK_FALSE(updates[0].msg.as<UpdateMsg>().triggered);
    CHECK(handle_hello(a, HelloMsg{RouterId{1}}, RouterId{1}, LinkId{0}).empty());
    CHECK(handle_hello(a, HelloMsg{RouterId{9}}, RouterId{9}, LinkId{4}).empty());
}

TEST_CASE("handle_update from a stranger is rejected")
{
    auto a = router(0, {{0, 1, 5, 300}});
    CHECK_THROWS_AS(handle_update(a, UpdateMsg{RouterId{4}, {}, false}, RouterId{4}), UnknownNeighbor);
}

TEST_CASE("local_link_changed triggers an update only on a class change")
{
    auto a = router(0, {{0, 1, 5, 350}, {1, 2, 5, 300}});
    CHECK(local_link_changed(a, LinkId{0}, LinkMetrics{5, 350, 30}).empty());
    CHECK(a.nt.find(LinkId{0})->metrics.residual_kbps() == 320);
    const auto out = local_link_changed(a, LinkId{0}, LinkMetrics{5, 350, 260});
    const auto updates = sends_of(out, MessageKind::Update);
    CHECK(updates.size() == 2);
    CHECK(updates[0].msg.as<UpdateMsg>().triggered);

    ProtocolOptions every;
    every.trigger_mode = TriggerMode::EveryChange;
    auto b = router(0, {{0, 1, 5, 300}}, every);
    CHECK(sends_of(local_link_changed(b, LinkId{0}, LinkMetrics{5, 300, 1}), MessageKind::Update).size() == 1);
}

TEST_CASE("start_connection: destination is a neighbor")
{
    auto s = router(0, {{0, 1, 5, 300}, {1, 2, 5, 300}});
    const auto out = start_connection(s, kConn, RouterId{1}, kReq);
    const auto probes = sends_of(out, MessageKind::Probe);
    REQUIRE(probes.size() == 1);
    CHECK(probes[0].to == RouterId{1});
    CHECK(probes[0].msg.as<ProbeMsg>().path.hops == std::vector<RouterId>{RouterId{0}});
    const auto timers = only<ArmTimerAction>(out);
    REQUIRE(timers.size() == 1);
    CHECK(timers[0].kind == TimerKind::ProbeTimeout);
    CHECK_THROWS_AS(start_connection(s, kConn, RouterId{1}, kReq), AlreadyActive);
}

TEST_CASE("start_connection: source equals destination")
{
    auto s = router(0, {{0, 1, 5, 300}});
    const auto out = start_connection(s, kConn, RouterId{0}, kReq);
    REQUIRE(out.size() == 1);
    const auto accept = only<AcceptCallAction>(out);
    REQUIRE(accept.size() == 1);
    CHECK(accept[0].path.hops == std::vector<RouterId>{RouterId{0}});
}

TEST_CASE("start_connection: destination beyond the SNT floods")
{
    // 0 - 1 - 3, 0 - 2 - 4, destination 9 unknown to router 0.
    auto s = router(0, {{0, 1, 5, 300}, {1, 2, 5, 300}});
    learn(s, 1, {{3, 5, 300}});
    learn(s, 2, {{4, 5, 300}});
    const auto plan = plan_forwarding(s, RouterId{9}, kReq, seed_path(RouterId{0}));
    CHECK(plan.rule == ForwardRule::Flood);
    CHECK_FALSE(plan.nack);
    const auto probes = sends_of(start_connection(s, kConn, RouterId{9}, kReq), MessageKind::Probe);
    REQUIRE(probes.size() == 2);
    CHECK(probes[0].to == RouterId{1});
    CHECK(probes[1].to == RouterId{2});

    auto narrow = router(0, {{0, 1, 5, 300}, {1, 2, 5, 300}});
    learn(narrow, 1, {{3, 5, 300}});
    learn(narrow, 2, {{4, 5, 50}});
    CHECK(plan_forwarding(narrow, RouterId{9}, kReq, seed_path(RouterId{0})).targets.size() == 1);
}

TEST_CASE("handle_probe at an intermediate router with the destination as neighbor")
{
    auto r1 = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}});
    const ProbeMsg probe{kConn, RouterId{2}, kReq, seed_path(RouterId{0}), std::nullopt};
    const auto out = handle_probe(r1, probe, RouterId{0}, LinkId{0});
    const auto probes = sends_of(out, MessageKind::Probe);
    REQUIRE(probes.size() == 1);
    CHECK(probes[0].to == RouterId{2});
    const auto& fwd = probes[0].msg.as<ProbeMsg>().path;
    CHECK(fwd.hops == std::vector<RouterId>{RouterId{0}, RouterId{1}});
    CHECK(fwd.total_delay_ms == 5);
    CHECK(*fwd.bottleneck_kbps == 300);

    auto narrow = router(1, {{0, 0, 5, 300}, {1, 2, 5, 80}});
    const auto nack_out = handle_probe(narrow, probe, RouterId{0}, LinkId{0});
    const auto nacks = sends_of(nack_out, MessageKind::Nack);
    REQUIRE(nacks.size() == 1);
    CHECK(nacks[0].to == RouterId{0});
    CHECK_FALSE(nacks[0].msg.as<NackMsg>().ack_phase);
    CHECK(sends_of(nack_out, MessageKind::Probe).empty());
}

TEST_CASE("handle_probe never floods back along the recorded path")
{
    auto r1 = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}, {2, 3, 5, 300}});
    learn(r1, 0, {{7, 5, 300}});
    learn(r1, 2, {{5, 5, 300}});
    learn(r1, 3, {{6, 5, 300}});
    const ProbeMsg probe{kConn, RouterId{4}, kReq, seed_path(RouterId{0}), std::nullopt};
    const auto probes = sends_of(handle_probe(r1, probe, RouterId{0}, LinkId{0}), MessageKind::Probe);
    REQUIRE(probes.size() == 2);
    CHECK(probes[0].to == RouterId{2});
    CHECK(probes[1].to == RouterId{3});
}

TEST_CASE("handle_probe via the SNT forwards to each neighbor that reaches the destination")
{
    auto r1 = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}, {2, 3, 5, 300}});
    learn(r1, 2, {{4, 5, 300}});
    learn(r1, 3, {{4, 5, 50}});
    const ProbeMsg probe{kConn, RouterId{4}, kReq, seed_path(RouterId{0}), std::nullopt};
    const auto probes = sends_of(handle_probe(r1, probe, RouterId{0}, LinkId{0}), MessageKind::Probe);
    REQUIRE(probes.size() == 1);
    CHECK(probes[0].to == RouterId{2});

    auto blocked = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}});
    learn(blocked, 2, {{4, 5, 50}});
    const auto out = handle_probe(blocked, probe, RouterId{0}, LinkId{0});
    CHECK(sends_of(out, MessageKind::Nack).size() == 1);
}

TEST_CASE("duplicate suppression drops later copies only after forwarding")
{
    auto r1 = router(1, {{0, 0, 5, 300}, {3, 5, 5, 300}, {1, 2, 5, 300}});
    const ProbeMsg a{kConn, RouterId{2}, kReq, seed_path(RouterId{0}), std::nullopt};
    const ProbeMsg b{kConn, RouterId{2}, kReq, seed_path(RouterId{5}), std::nullopt};
    CHECK(sends_of(handle_probe(r1, a, RouterId{0}, LinkId{0}), MessageKind::Probe).size() == 1);
    CHECK(handle_probe(r1, b, RouterId{5}, LinkId{3}).empty());

    ProtocolOptions off;
    off.suppress_duplicates = false;
    auto r2 = router(1, {{0, 0, 5, 300}, {3, 5, 5, 300}, {1, 2, 5, 300}}, off);
    CHECK(sends_of(handle_probe(r2, a, RouterId{0}, LinkId{0}), MessageKind::Probe).size() == 1);
    CHECK(sends_of(handle_probe(r2, b, RouterId{5}, LinkId{3}), MessageKind::Probe).size() == 1);
}

TEST_CASE("destination collects candidates and arms one window")
{
    auto d = router(3, {{0, 1, 5, 300}, {1, 2, 5, 300}});
    const ProbeMsg p1{kConn, RouterId{3}, kReq, path_of({0, 1}, 7, 200), std::nullopt};
    const ProbeMsg p2{kConn, RouterId{3}, kReq, path_of({0, 2}, 4, 500), std::nullopt};
    const auto first = handle_probe(d, p1, RouterId{1}, LinkId{0});
    CHECK(only<ArmTimerAction>(first).size() == 1);
    CHECK(handle_probe(d, p2, RouterId{2}, LinkId{1}).empty());
    CHECK(handle_probe(d, p1, RouterId{1}, LinkId{0}).empty());
    REQUIRE(d.collecting.at(kConn).candidates.size() == 2);
    CHECK(d.collecting.at(kConn).candidates[0].total_delay_ms == 12);
}

TEST_CASE("collect_and_ack acks along the best candidate")
{
    auto d = router(3, {{0, 1, 5, 300}, {1, 2, 5, 300}});
    d.collecting[kConn] = CollectSession{QosRequest{100, 20},
                                         {path_of({0, 1, 3}, 12, 200), path_of({0, 2, 3}, 9, 120)},
                                         false};
    const auto acks = sends_of(collect_and_ack(d, kConn), MessageKind::Ack);
    REQUIRE(acks.size() == 1);
    CHECK(acks[0].to == RouterId{2});
    CHECK(acks[0].msg.as<AckMsg>().path.total_delay_ms == 9);
    CHECK(d.reservations.at(kConn).phase == ReservationPhase::Active);
    CHECK(collect_and_ack(d, kConn).empty());

    auto one = router(3, {{0, 1, 5, 300}});
    one.collecting[kConn] = CollectSession{kReq, {path_of({0, 1, 3}, 12, 200)}, false};
    CHECK(sends_of(collect_and_ack(one, kConn), MessageKind::Ack)[0].to == RouterId{1});

    auto none = router(3, {{0, 1, 5, 300}});
    none.collecting[kConn] = CollectSession{kReq, {}, false};
    CHECK(collect_and_ack(none, kConn).empty());
    CHECK(collect_and_ack(none, ConnectionId{77}).empty());
}

TEST_CASE("handle_ack reserves and walks upstream")
{
    auto r1 = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}});
    const AckMsg ack{kConn, kReq, path_of({0, 1, 2}, 10, 300)};
    const auto out = handle_ack(r1, ack, RouterId{2});
    const auto res = only<ReserveAction>(out);
    REQUIRE(res.size() == 1);
    CHECK(res[0].link == LinkId{1});
    CHECK(res[0].kbps == 100);
    const auto up = sends_of(out, MessageKind::Ack);
    REQUIRE(up.size() == 1);
    CHECK(up[0].to == RouterId{0});
    CHECK(r1.reservations.at(kConn).downstream == RouterId{2});

    CHECK_THROWS_AS(handle_ack(r1, ack, RouterId{0}), PathMismatch);
}

TEST_CASE("handle_ack fails when the residual was consumed")
{
    auto r1 = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}});
    local_link_changed(r1, LinkId{1}, LinkMetrics{5, 300, 250});
    const AckMsg ack{kConn, kReq, path_of({0, 1, 2}, 10, 300)};
    const auto out = handle_ack(r1, ack, RouterId{2});
    CHECK(only<ReserveAction>(out).empty());
    const auto failures = sends_of(out, MessageKind::Failure);
    REQUIRE(failures.size() == 1);
    CHECK(failures[0].to == RouterId{2});
    const auto nacks = sends_of(out, MessageKind::Nack);
    REQUIRE(nacks.size() == 1);
    CHECK(nacks[0].to == RouterId{0});
    CHECK(nacks[0].msg.as<NackMsg>().ack_phase);
}

TEST_CASE("handle_ack at the source accepts the call")
{
    auto s = router(0, {{0, 1, 5, 300}});
    start_connection(s, kConn, RouterId{2}, kReq);
    const auto out = handle_ack(s, AckMsg{kConn, kReq, path_of({0, 1, 2}, 10, 300)}, RouterId{1});
    REQUIRE(only<AcceptCallAction>(out).size() == 1);
    CHECK(only<ReserveAction>(out).size() == 1);
    CHECK(s.sessions.at(kConn).phase == SourcePhase::Accepted);

    auto late = router(0, {{0, 1, 5, 300}});
    start_connection(late, kConn, RouterId{2}, kReq);
    probe_timeout(late, kConn);
    const auto td = handle_ack(late, AckMsg{kConn, kReq, path_of({0, 1, 2}, 10, 300)}, RouterId{1});
    CHECK(sends_of(td, MessageKind::Teardown).size() == 1);
    CHECK(only<ReserveAction>(td).empty());
}

TEST_CASE("handle_ack at the source with no room blocks the call")
{
    auto s = router(0, {{0, 1, 5, 50}});
    start_connection(s, kConn, RouterId{2}, kReq);
    const auto out = handle_ack(s, AckMsg{kConn, kReq, path_of({0, 1, 2}, 10, 300)}, RouterId{1});
    CHECK(sends_of(out, MessageKind::Failure).size() == 1);
    const auto blocks = only<BlockCallAction>(out);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].reason == BlockReason::AckPhaseFailure);
}

TEST_CASE("handle_failure releases and forwards downstream")
{
    auto r1 = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}});
    const AckMsg ack{kConn, kReq, path_of({0, 1, 2}, 10, 300)};
    handle_ack(r1, ack, RouterId{2});
    const auto out = handle_failure(r1, FailureMsg{kConn, ack.path});
    const auto rel = only<ReleaseAction>(out);
    REQUIRE(rel.size() == 1);
    CHECK(rel[0].link == LinkId{1});
    CHECK(rel[0].kbps == 100);
    const auto fwd = sends_of(out, MessageKind::Failure);
    REQUIRE(fwd.size() == 1);
    CHECK(fwd[0].to == RouterId{2});
    CHECK(handle_failure(r1, FailureMsg{kConn, ack.path}).empty());

    auto d = router(2, {{1, 1, 5, 300}});
    d.collecting[kConn] = CollectSession{kReq, {path_of({0, 1, 2}, 10, 300)}, false};
    collect_and_ack(d, kConn);
    CHECK(handle_failure(d, FailureMsg{kConn, ack.path}).empty());
    CHECK(d.reservations.at(kConn).phase == ReservationPhase::Released);

    auto stranger = router(5, {{9, 1, 5, 300}});
    CHECK(handle_failure(stranger, FailureMsg{kConn, ack.path}).empty());
}

TEST_CASE("handle_nack")
{
    auto r1 = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}});
    const auto fwd = sends_of(handle_nack(r1, NackMsg{kConn, path_of({0, 1, 2}), false}), MessageKind::Nack);
    REQUIRE(fwd.size() == 1);
    CHECK(fwd[0].to == RouterId{0});

    auto s = router(0, {{0, 1, 5, 300}});
    start_connection(s, kConn, RouterId{2}, kReq);
    CHECK(handle_nack(s, NackMsg{kConn, path_of({0, 1}), false}).empty());
    CHECK(s.sessions.at(kConn).nacks_seen == 1);
    const auto blocks = only<BlockCallAction>(handle_nack(s, NackMsg{kConn, path_of({0, 1, 2}), true}));
    REQUIRE(blocks.size() == 1);
    CHECK(s.sessions.at(kConn).phase == SourcePhase::Failed);

    auto accepted = router(0, {{0, 1, 5, 300}});
    start_connection(accepted, kConn, RouterId{2}, kReq);
    handle_ack(accepted, AckMsg{kConn, kReq, path_of({0, 1, 2}, 10, 300)}, RouterId{1});
    CHECK(handle_nack(accepted, NackMsg{kConn, path_of({0, 1, 2}), true}).empty());
    CHECK(accepted.sessions.at(kConn).phase == SourcePhase::Accepted);
}

TEST_CASE("handle_teardown releases each hop once")
{
    auto r1 = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}});
    handle_ack(r1, AckMsg{kConn, kReq, path_of({0, 1, 2}, 10, 300)}, RouterId{2});
    const auto out = handle_teardown(r1, TeardownMsg{kConn});
    CHECK(only<ReleaseAction>(out).size() == 1);
    CHECK(sends_of(out, MessageKind::Teardown).size() == 1);
    CHECK(handle_teardown(r1, TeardownMsg{kConn}).empty());

    auto d = router(2, {{1, 1, 5, 300}});
    d.collecting[kConn] = CollectSession{kReq, {path_of({0, 1, 2}, 10, 300)}, false};
    collect_and_ack(d, kConn);
    CHECK(handle_teardown(d, TeardownMsg{kConn}).empty());
}

TEST_CASE("handle_data follows the reservation")
{
    auto r1 = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}});
    handle_ack(r1, AckMsg{kConn, kReq, path_of({0, 1, 2}, 10, 300)}, RouterId{2});
    const auto fwd = only<SendAction>(handle_data(r1, DataMsg{kConn, 1000}));
    REQUIRE(fwd.size() == 1);
    CHECK(fwd[0].link == LinkId{1});

    auto d = router(2, {{1, 1, 5, 300}});
    d.collecting[kConn] = CollectSession{kReq, {path_of({0, 1, 2}, 10, 300)}, false};
    collect_and_ack(d, kConn);
    const auto del = only<DeliverAction>(handle_data(d, DataMsg{kConn, 1000}));
    REQUIRE(del.size() == 1);
    CHECK(del[0].bytes == 1000);

    handle_teardown(r1, TeardownMsg{kConn});
    const auto drop = only<DropDataAction>(handle_data(r1, DataMsg{kConn, 1000}));
    REQUIRE(drop.size() == 1);
    CHECK(drop[0].bytes == 1000);
}

TEST_CASE("probe_timeout blocks only a call still probing")
{
    auto s = router(0, {{0, 1, 5, 300}});
    start_connection(s, kConn, RouterId{2}, kReq);
    const auto out = only<BlockCallAction>(probe_timeout(s, kConn));
    REQUIRE(out.size() == 1);
    CHECK(out[0].reason == BlockReason::ProbeTimeout);
    CHECK(probe_timeout(s, kConn).empty());
}

TEST_CASE("source-routed probes follow the explicit route")
{
    auto s = router(0, {{0, 1, 5, 300}});
    const auto out = start_source_routed(s, kConn, RouterId{2}, kReq, path_of({0, 1, 2}, 10, 300));
    const auto probes = sends_of(out, MessageKind::Probe);
    REQUIRE(probes.size() == 1);
    CHECK(probes[0].msg.as<ProbeMsg>().explicit_route.has_value());

    auto r1 = router(1, {{0, 0, 5, 300}, {1, 2, 5, 300}, {2, 3, 1, 300}});
    const auto hop = sends_of(handle_probe(r1, probes[0].msg.as<ProbeMsg>(), RouterId{0}, LinkId{0}),
                              MessageKind::Probe);
    REQUIRE(hop.size() == 1);
    CHECK(hop[0].to == RouterId{2});

    auto none = router(0, {{0, 1, 5, 300}});
    const auto blocked = only<BlockCallAction>(start_source_routed(none, kConn, RouterId{2}, kReq, std::nullopt));
    REQUIRE(blocked.size() == 1);
    CHECK(blocked[0].reason == BlockReason::NoRoute);
}
