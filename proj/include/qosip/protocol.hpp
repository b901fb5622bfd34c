// Per-router connection-setup state machine: probe forwarding, destination
// path collection, the ACK reservation walk, NACK/failure handling,
// teardown and data forwarding over the reserved path.
//
// Handlers mutate the router's own state and return the actions the engine
// must carry out; they never touch other routers or perform I/O.
#pragma once

#include "qosip/model.hpp"
#include "qosip/pathselect.hpp"
#include "qosip/tables.hpp"

#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

namespace qosip {

class AlreadyActive : public Error {
public:
    using Error::Error;
};
class PathMismatch : public Error {
public:
    using Error::Error;
};

struct ProtocolOptions {
    ClassPolicy policy{};
    bool suppress_duplicates{true};
    LinkChoice link_choice{LinkChoice::BestFit};
    TriggerMode trigger_mode{TriggerMode::ClassBoundary};
    bool exchange_updates{true};  // false when the link-state baseline runs
    std::int64_t probe_timeout_us{1'000'000};
    std::int64_t collect_window_us{100'000};
};

/// A link attached to this router, known before any HELLO is exchanged.
struct LocalLink {
    LinkId link;
    RouterId peer;
    LinkMetrics metrics;
};

enum class ReservationPhase { Tentative, Active, Released };

struct ReservationEntry {
    std::optional<RouterId> upstream;    // nullopt = this router is the source
    std::optional<RouterId> downstream;  // nullopt = this router is the destination
    std::optional<LinkId> link_to_downstream;
    std::int64_t reserved_kbps{0};
    ReservationPhase phase{ReservationPhase::Tentative};
};

enum class SourcePhase { Probing, Accepted, Blocked, Failed };

struct SourceSession {
    RouterId destination;
    QosRequest qos;
    SourcePhase phase{SourcePhase::Probing};
    std::size_t nacks_seen{0};
};

struct CollectSession {
    QosRequest qos;
    std::vector<PathRecord> candidates;
    bool closed{false};
};

struct RouterState {
    RouterId id;
    std::vector<LocalLink> interfaces;
    ProtocolOptions options;

    NeighborTable nt;
    SecondNeighborTable snt;
    std::set<LinkId> greeted_links;
    std::map<ConnectionId, ReservationEntry> reservations;
    std::set<ConnectionId> probe_cache;
    std::map<ConnectionId, SourceSession> sessions;      // connections this router originated
    std::map<ConnectionId, CollectSession> collecting;  // connections ending here
};

// ---------------------------------------------------------------------------
// Actions

enum class TimerKind { ProbeTimeout, CollectWindow };
enum class BlockReason { ProbeTimeout, AckPhaseFailure, NoRoute };

struct SendAction {
    RouterId to;
    LinkId link;
    Message msg;
};
struct DeliverAction {
    ConnectionId conn;
    std::int64_t bytes{0};
};
struct ReserveAction {
    LinkId link;
    std::int64_t kbps{0};
    ConnectionId conn;
};
struct ReleaseAction {
    LinkId link;
    std::int64_t kbps{0};
    ConnectionId conn;
};
struct AcceptCallAction {
    ConnectionId conn;
    PathRecord path;
};
struct BlockCallAction {
    ConnectionId conn;
    BlockReason reason{BlockReason::ProbeTimeout};
};
struct ArmTimerAction {
    TimerKind kind;
    ConnectionId conn;
    std::int64_t delay_us{0};
};
struct DropDataAction {
    ConnectionId conn;
    std::int64_t bytes{0};
};

using Action = std::variant<SendAction, DeliverAction, ReserveAction, ReleaseAction,
                            AcceptCallAction, BlockCallAction, ArmTimerAction, DropDataAction>;
using Actions = std::vector<Action>;

// ---------------------------------------------------------------------------
// Neighbor discovery and table maintenance

RouterState make_router(RouterId id, std::vector<LocalLink> interfaces, ProtocolOptions options);

/// HELLO on every attached link not greeted yet.
Actions emit_hellos(RouterState& state);
Actions handle_hello(RouterState& state, const HelloMsg& hello, RouterId from, LinkId link);
Actions handle_update(RouterState& state, const UpdateMsg& update, RouterId from);
/// The engine reports a new reservation level on one of this router's links.
Actions local_link_changed(RouterState& state, LinkId link, const LinkMetrics& now);

// ---------------------------------------------------------------------------
// Connection setup

enum class ForwardRule { None, Destination, NeighborHit, SecondNeighborHit, Flood, SourceRoute };

struct ForwardPlan {
    ForwardRule rule{ForwardRule::None};
    std::vector<NtEntry> targets;  // one link per distinct next-hop router
    bool nack{false};              // the rule failed and upstream must hear about it
};

/// Decides where a probe whose recorded path already ends at this router
/// goes next. Pure; used by start_connection and handle_probe.
ForwardPlan plan_forwarding(const RouterState& state, RouterId destination,
                            const QosRequest& qos, const PathRecord& path);

Actions start_connection(RouterState& state, ConnectionId conn, RouterId destination,
                         const QosRequest& qos);
/// Baseline entry point: the source already computed `route` (or none).
Actions start_source_routed(RouterState& state, ConnectionId conn, RouterId destination,
                            const QosRequest& qos, const std::optional<PathRecord>& route);

Actions handle_probe(RouterState& state, const ProbeMsg& probe, RouterId arrived_from,
                     LinkId arrived_link);
Actions collect_and_ack(RouterState& state, ConnectionId conn);
Actions handle_ack(RouterState& state, const AckMsg& ack, RouterId arrived_from);
Actions handle_nack(RouterState& state, const NackMsg& nack);
Actions handle_failure(RouterState& state, const FailureMsg& failure);
Actions handle_teardown(RouterState& state, const TeardownMsg& teardown);
Actions handle_data(RouterState& state, const DataMsg& data);
Actions probe_timeout(RouterState& state, ConnectionId conn);

/// Routes any message to its handler. `arrived_link` is unset for messages
/// the engine injects locally (source-side Data and Teardown).
Actions dispatch(RouterState& state, const Message& msg, RouterId from,
                 std::optional<LinkId> arrived_link);

}  // namespace qosip
