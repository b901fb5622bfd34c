// Network topology and connection scenarios, with their line-oriented file
// formats:
//
//   topology:  node <id>
//              link <id_a> <id_b> <capacity_kbps> <delay_ms>
//   scenario:  conn <id> <src> <dst> <bw_kbps> <max_delay_ms|-> <start_s>
//                   <duration_s> <cbr_kbps> <pkt_bytes>
//
// `#` starts a comment. Links are numbered in file order starting at 0.
#pragma once

#include "qosip/model.hpp"

#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <vector>

namespace qosip {

class InvalidTopology : public Error {
public:
    using Error::Error;
};
class ScenarioError : public Error {
public:
    using Error::Error;
};
class InvalidParams : public Error {
public:
    using Error::Error;
};

struct TopologyLink {
    LinkId id;
    RouterId a;
    RouterId b;
    LinkMetrics metrics;  // reserved_kbps is 0 in a topology description
};

struct Topology {
    std::set<RouterId> routers;
    std::vector<TopologyLink> links;

    bool has_router(RouterId r) const { return routers.contains(r); }
    const TopologyLink* find_link(LinkId id) const;
    /// Throws InvalidTopology on dangling endpoints, duplicate link ids,
    /// self-loops or non-positive capacity.
    void validate() const;
};

struct ConnectionSpec {
    ConnectionId conn;
    RouterId src;
    RouterId dst;
    QosRequest qos;
    std::int64_t start_us{0};
    std::int64_t duration_us{0};
    std::int64_t cbr_kbps{1};
    std::int64_t pkt_bytes{1};
};

struct Scenario {
    std::vector<ConnectionSpec> connections;
    /// Throws ScenarioError for unknown routers, duplicate ids or a CBR rate
    /// above the reserved bandwidth.
    void validate(const Topology& topology) const;
};

Topology parse_topology(std::istream& in, const std::string& source_name = "<topology>");
Topology load_topology(const std::string& path);
Scenario parse_scenario(std::istream& in, const Topology& topology,
                        const std::string& source_name = "<scenario>");
Scenario load_scenario(const std::string& path, const Topology& topology);

std::string write_topology(const Topology& topology);

/// Parses a non-negative decimal number of seconds ("27", "0.02") into
/// whole microseconds. Returns false on malformed input or more than six
/// fractional digits.
bool parse_seconds(const std::string& text, std::int64_t& micros);

struct GenParams {
    std::uint32_t nodes{8};
    std::uint32_t degree{3};  // target average degree
    std::int64_t capacity_min_kbps{100};
    std::int64_t capacity_max_kbps{1000};
    std::int64_t delay_min_ms{1};
    std::int64_t delay_max_ms{10};
    std::uint64_t seed{1};
};

/// Deterministic random connected topology: a random spanning tree plus
/// extra links until the average degree is reached. Throws InvalidParams.
Topology generate_topology(const GenParams& params);

}  // namespace qosip
