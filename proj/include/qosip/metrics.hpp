// Run counters, per-second throughput series, call outcomes, the event
// trace, and their CSV exports.
#pragma once

#include "qosip/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qosip {

class NoConnections : public Error {
public:
    using Error::Error;
};
class IoError : public Error {
public:
    using Error::Error;
};

enum class Outcome { Pending, Accepted, Blocked, Failed };
const char* to_string(Outcome outcome);

struct MessageCount {
    std::int64_t count{0};
    std::int64_t bytes{0};
};

struct RouterCounters {
    std::int64_t events{0};
    std::int64_t computations{0};
    std::int64_t floods_initiated{0};
};

struct ConnectionRecord {
    ConnectionId conn;
    RouterId src;
    RouterId dst;
    Outcome outcome{Outcome::Pending};
    std::optional<PathRecord> path;
    std::optional<std::int64_t> setup_us;
};

struct Counters {
    std::map<MessageKind, MessageCount> messages;
    std::int64_t boot_updates{0};
    std::int64_t triggered_updates{0};
    std::int64_t boot_link_states{0};
    std::int64_t triggered_link_states{0};
    std::int64_t data_bytes_originated{0};
    std::int64_t data_bytes_dropped{0};
    std::int64_t data_packets_dropped{0};
    std::map<RouterId, RouterCounters> routers;
    std::map<ConnectionId, ConnectionRecord> connections;

    void count_send(const Message& msg);
    std::int64_t sent(MessageKind kind) const;
    std::int64_t total_computations() const;
    std::int64_t attempted() const { return static_cast<std::int64_t>(connections.size()); }
    std::int64_t with_outcome(Outcome outcome) const;
};

/// (Blocked + Failed) / attempted. Throws NoConnections when nothing was attempted.
double blocking_rate(const Counters& counters);

/// Bytes delivered per destination router in 1-second buckets.
class ThroughputSeries {
public:
    void add(RouterId node, std::int64_t time_us, std::int64_t bytes);
    std::int64_t total(RouterId node) const;
    std::int64_t total() const;
    /// Bucket start (s) -> bytes, contiguous from first to last non-empty
    /// bucket with zeros filled in.
    std::map<std::int64_t, std::int64_t> buckets(RouterId node) const;
    std::vector<RouterId> nodes() const;

private:
    std::map<RouterId, std::map<std::int64_t, std::int64_t>> buckets_;
};

enum class TraceKind { Send, Receive, Timer, Accept, Block, Reserve, Release, Deliver, Drop };
const char* to_string(TraceKind kind);

struct TraceRecord {
    std::int64_t time_us{0};
    std::uint64_t seq{0};
    TraceKind kind{TraceKind::Send};
    RouterId router;
    std::optional<RouterId> peer;
    std::optional<LinkId> link;
    std::optional<MessageKind> message;
    std::optional<ConnectionId> conn;
    std::vector<RouterId> path;
    std::int64_t value{0};  // bytes, kbps or timer id depending on kind
};

struct EventTrace {
    std::vector<TraceRecord> records;

    /// FNV-1a over every field of every record.
    std::uint64_t hash() const;
};

std::string format_fixed3(std::int64_t thousandths);
std::string format_ratio(std::int64_t num, std::int64_t den);

std::string throughput_csv(const ThroughputSeries& series);
std::string messages_csv(const Counters& counters);
std::string connections_csv(const Counters& counters);
std::string routers_csv(const Counters& counters);
std::string trace_csv(const EventTrace& trace);

/// Writes throughput.csv, messages.csv, connections.csv and routers.csv.
void export_csv(const Counters& counters, const ThroughputSeries& series,
                const std::filesystem::path& out_dir);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace qosip
