#include "qosip/model.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace qosip;

namespace {
LinkMetrics link(std::int64_t delay, std::int64_t residual)
{
    return LinkMetrics{delay, residual, 0};
}
}  // namespace

TEST_CASE("extend_path: single link from an empty record")
{
    const auto p = extend_path(PathRecord{}, link(10, 500), RouterId{3});
    CHECK(p.hops == std::vector<RouterId>{RouterId{3}});
    CHECK(p.total_delay_ms == 10);
    CHECK(p.bottleneck_kbps == 500);
}

TEST_CASE("extend_path: delay adds, bandwidth takes the minimum")
{
    PathRecord p{{RouterId{0}, RouterId{1}}, 5, 300};
    const auto q = extend_path(p, link(7, 200), RouterId{2});
    CHECK(q.hops == std::vector<RouterId>{RouterId{0}, RouterId{1}, RouterId{2}});
    CHECK(q.total_delay_ms == 12);
    CHECK(q.bottleneck_kbps == 200);
}

TEST_CASE("extend_path: residual uses capacity minus reservations")
{
    const auto p = extend_path(seed_path(RouterId{0}), LinkMetrics{4, 1000, 700}, RouterId{1});
    CHECK(p.bottleneck_kbps == 300);
}

TEST_CASE("extend_path: revisiting a router is a loop")
{
    PathRecord p{{RouterId{0}, RouterId{1}}, 5, 300};
    CHECK_THROWS_AS(extend_path(p, link(1, 1000), RouterId{1}), LoopDetected);
    CHECK_THROWS_AS(extend_path(p, link(1, 1000), RouterId{0}), LoopDetected);
}

TEST_CASE("seed_path has no bottleneck")
{
    const auto p = seed_path(RouterId{4});
    CHECK(p.hops.size() == 1);
    CHECK(p.total_delay_ms == 0);
    CHECK_FALSE(p.bottleneck_kbps.has_value());
}

TEST_CASE("property: folding links equals sum of delays and min of residuals")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const auto n = 1 + rng() % 12;
        std::vector<LinkMetrics> links;
        for (std::size_t i = 0; i < n; ++i) {
            links.push_back(LinkMetrics{static_cast<std::int64_t>(rng() % 50),
                                        static_cast<std::int64_t>(1 + rng() % 5000),
                                        0});
        }
        PathRecord p;
        for (std::size_t i = 0; i < n; ++i) {
            p = extend_path(p, links[i], RouterId{static_cast<std::uint32_t>(i)});
        }
        std::int64_t sum = 0;
        std::int64_t min = links[0].residual_kbps();
        for (const auto& l : links) {
            sum += l.delay_ms;
            min = std::min(min, l.residual_kbps());
        }
        REQUIRE(p.total_delay_ms == sum);
        REQUIRE(p.bottleneck_kbps == min);
        auto hops = p.hops;
        std::sort(hops.begin(), hops.end());
        REQUIRE(std::adjacent_find(hops.begin(), hops.end()) == hops.end());
    }
}

TEST_CASE("property: paths built by extend_path never repeat a router")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        PathRecord p = seed_path(RouterId{0});
        for (int step = 0; step < 20; ++step) {
            RouterId next{static_cast<std::uint32_t>(rng() % 10)};
            try {
                p = extend_path(p, LinkMetrics{1, 100, 0}, next);
            } catch (const LoopDetected&) {
                REQUIRE(p.contains(next));
            }
        }
        auto hops = p.hops;
        std::sort(hops.begin(), hops.end());
        REQUIRE(std::adjacent_find(hops.begin(), hops.end()) == hops.end());
    }
}

TEST_CASE("nominal message sizes")
{
    PathRecord p{{RouterId{0}, RouterId{1}, RouterId{2}}, 10, 100};
    CHECK(nominal_bytes(Message{HelloMsg{RouterId{0}}}) == 16);
    CHECK(nominal_bytes(Message{TeardownMsg{ConnectionId{1}}}) == 16);
    UpdateMsg u{RouterId{0}, {{RouterId{1}, {}}, {RouterId{2}, {}}}, false};
    CHECK(nominal_bytes(Message{u}) == 16 + 24);
    CHECK(nominal_bytes(Message{AckMsg{ConnectionId{1}, {}, p}}) == 32 + 12);
    CHECK(nominal_bytes(Message{DataMsg{ConnectionId{1}, 1000}}) == 1000);
}

TEST_CASE("message accessors")
{
    Message probe{ProbeMsg{ConnectionId{7}, RouterId{3}, {}, seed_path(RouterId{0}), {}}};
    CHECK(probe.kind() == MessageKind::Probe);
    CHECK(probe.conn() == ConnectionId{7});
    REQUIRE(probe.path() != nullptr);
    CHECK(probe.path()->hops.front() == RouterId{0});

    Message hello{HelloMsg{RouterId{1}}};
    CHECK_FALSE(hello.conn().has_value());
    CHECK(hello.path() == nullptr);
    CHECK(std::string(to_string(MessageKind::LinkState)) == "LinkState");
}
