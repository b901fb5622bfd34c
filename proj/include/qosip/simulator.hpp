// Deterministic discrete-event engine. Owns the topology's live link state
// and every router's protocol state, delivers messages after the link
// delay, drives CBR sources and records the trace and counters.
//
// Time is integer microseconds. Events run in (time, seq) order where seq
// is assigned when the event is scheduled, so identical inputs always give
// an identical trace. No randomness is used.
#pragma once

#include "qosip/baseline.hpp"
#include "qosip/metrics.hpp"
#include "qosip/protocol.hpp"
#include "qosip/topology.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qosip {

class InvariantViolation : public Error {
public:
    using Error::Error;
};

enum class BaselineMode { None, SourceRouting };

struct SimConfig {
    ProtocolOptions protocol{};
    BaselineMode baseline{BaselineMode::None};
    std::int64_t max_time_us{600'000'000};
    bool record_trace{true};
};

struct CbrPlan {
    std::int64_t interval_us{0};
    std::vector<std::int64_t> packet_times_us;
    std::int64_t teardown_us{0};
};

/// Packets every pkt_bytes*8/cbr_kbps (rounded down to whole microseconds)
/// from `accept_time_us` while inside the duration; the teardown follows at
/// accept + duration.
CbrPlan cbr_schedule(const ConnectionSpec& spec, std::int64_t accept_time_us);

struct RunResult {
    EventTrace trace;
    Counters counters;
    ThroughputSeries throughput;
    /// Candidate paths each destination held when its collection window closed.
    std::map<ConnectionId, std::vector<PathRecord>> candidates;
    std::map<LinkId, LinkMetrics> final_links;
    std::int64_t end_time_us{0};
    bool drained{false};

    std::int64_t reserved_total() const;
};

class Simulator {
public:
    Simulator(Topology topology, SimConfig config);

    /// Schedules HELLOs from every router at t=0.
    void boot();
    void add_connection(const ConnectionSpec& spec);
    void add_scenario(const Scenario& scenario);

    /// Processes one event. Returns false when the queue is empty or the
    /// next event lies beyond max_time.
    bool step();
    void run_all();

    /// Delivers `msg` to `to` over `link` after the link delay, as if `from`
    /// had sent it now. Used by tests to script message races.
    void inject(RouterId from, RouterId to, LinkId link, Message msg);

    std::int64_t now_us() const { return now_us_; }
    bool idle() const { return queue_.empty(); }
    const Topology& topology() const { return topology_; }
    const SimConfig& config() const { return config_; }
    const RouterState& router(RouterId id) const;
    RouterState& router_mut(RouterId id);
    const LinkMetrics& link(LinkId id) const;
    const LinkStateDb& link_state_db(RouterId id) const;
    const Counters& counters() const { return result_.counters; }
    const EventTrace& trace() const { return result_.trace; }
    const ThroughputSeries& throughput() const { return result_.throughput; }

    RunResult result() const;

    /// Differences between every router's SNT and what its neighbors' NTs
    /// imply; empty at quiescence.
    std::vector<std::string> snt_consistency_errors() const;

private:
    struct BootEvent {};
    struct StartEvent {
        ConnectionId conn;
    };
    struct MessageEvent {
        RouterId from;
        std::optional<LinkId> link;  // unset for locally injected traffic
        Message msg;
        std::int64_t sent_us{0};
    };
    struct TimerEvent {
        TimerKind kind;
        ConnectionId conn;
    };
    struct DataSourceEvent {
        ConnectionId conn;
        bool teardown{false};
    };
    using Payload = std::variant<BootEvent, StartEvent, MessageEvent, TimerEvent, DataSourceEvent>;
    struct Event {
        RouterId target;
        Payload payload;
    };
    using Key = std::pair<std::int64_t, std::uint64_t>;  // (time_us, seq)

    void schedule(std::int64_t at_us, RouterId target, Payload payload);
    void handle(RouterId target, Payload& payload);
    void apply(RouterId actor, Actions actions);
    void send(RouterId from, RouterId to, LinkId link, Message msg);
    void change_link(RouterId actor, LinkId link, std::int64_t delta_kbps, ConnectionId conn);
    void trace(TraceRecord record);
    TraceRecord record(TraceKind kind, RouterId router) const;

    Topology topology_;
    SimConfig config_;
    std::map<RouterId, RouterState> routers_;
    std::map<RouterId, LinkStateDb> lsdb_;
    std::map<LinkId, LinkMetrics> links_;
    std::map<LinkId, std::uint64_t> link_versions_;
    std::map<ConnectionId, ConnectionSpec> specs_;
    std::map<Key, Event> queue_;
    std::uint64_t next_seq_{0};
    std::int64_t now_us_{0};
    std::uint64_t current_seq_{0};
    RunResult result_;
};

/// Boots, loads the scenario and runs until the queue drains or max_time.
RunResult run_simulation(const Topology& topology, const Scenario& scenario,
                         const SimConfig& config);

}  // namespace qosip
