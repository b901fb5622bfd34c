// Small conveniences shared by the test binaries.
#pragma once

#include "qosip/simulator.hpp"
#include "qosip/topology.hpp"

#include <sstream>
#include <string>

namespace testing {

inline std::string scenario_path(const std::string& name)
{
    return std::string(QOSIP_SCENARIO_DIR) + "/" + name;
}

inline qosip::Topology topo(const std::string& text)
{
    std::istringstream in(text);
    return qosip::parse_topology(in);
}

inline qosip::Scenario scenario(const std::string& text, const qosip::Topology& t)
{
    std::istringstream in(text);
    return qosip::parse_scenario(in, t);
}

inline qosip::ConnectionSpec conn(std::uint32_t id, std::uint32_t src, std::uint32_t dst,
                                  std::int64_t bw, std::int64_t start_us,
                                  std::int64_t duration_us = 1'000'000,
                                  std::int64_t cbr_kbps = 64, std::int64_t pkt_bytes = 500)
{
    return qosip::ConnectionSpec{qosip::ConnectionId{id}, qosip::RouterId{src}, qosip::RouterId{dst},
                                 qosip::QosRequest{bw, std::nullopt}, start_us, duration_us,
                                 cbr_kbps, pkt_bytes};
}

}  // namespace testing

#include "oracles.hpp"

#include <random>

namespace testing {

struct Case {
    qosip::Topology topology;
    qosip::Scenario scenario;
};

/// Random connected graph with contended calls: narrow links, overlapping
/// start times and mixed delay bounds so ACK-phase races occur.
inline Case random_case(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto pick = [&](std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
    };
    const auto n = static_cast<std::uint32_t>(pick(3, 8));
    Case c;
    c.topology = oracle::random_topology(rng, n, static_cast<std::uint32_t>(pick(0, 6)), 80, 400, 1, 12);
    const auto calls = pick(3, 10);
    for (std::int64_t i = 1; i <= calls; ++i) {
        auto src = static_cast<std::uint32_t>(pick(0, n - 1));
        auto dst = static_cast<std::uint32_t>(pick(0, n - 1));
        const auto bw = pick(40, 200);
        std::optional<std::int64_t> bound;
        if (pick(0, 2) == 0) {
            bound = pick(10, 60);
        }
        c.scenario.connections.push_back(qosip::ConnectionSpec{
            qosip::ConnectionId{static_cast<std::uint32_t>(i)}, qosip::RouterId{src}, qosip::RouterId{dst},
            qosip::QosRequest{bw, bound}, 1'000'000 + pick(0, 40) * 5'000, pick(50, 2'000) * 1'000,
            std::min<std::int64_t>(bw, 64), 500});
    }
    return c;
}

}  // namespace testing
