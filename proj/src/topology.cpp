#include "qosip/topology.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace qosip {

namespace {

std::vector<std::string> tokenize(const std::string& line)
{
    std::string content = line.substr(0, line.find('#'));
    std::istringstream is(content);
    std::vector<std::string> tokens;
    for (std::string t; is >> t;) {
        tokens.push_back(t);
    }
    return tokens;
}

bool parse_int(const std::string& text, std::int64_t& out)
{
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

template <class E>
[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what)
{
    std::ostringstream os;
    os << source << ":" << line << ": " << what;
    throw E(os.str());
}

template <class E>
std::int64_t field(const std::string& source, std::size_t line, const std::string& token,
                   const char* name, std::int64_t min_value)
{
    std::int64_t v = 0;
    if (!parse_int(token, v)) {
        fail<E>(source, line, std::string(name) + " must be an integer, got '" + token + "'");
    }
    if (v < min_value) {
        fail<E>(source, line,
                std::string(name) + " must be >= " + std::to_string(min_value) + ", got " + token);
    }
    return v;
}

RouterId router_id(std::int64_t v)
{
    return RouterId{static_cast<std::uint32_t>(v)};
}

constexpr std::int64_t kMaxId = 0xFFFFFFFFLL;

}  // namespace

const TopologyLink* Topology::find_link(LinkId id) const
{
    for (const auto& l : links) {
        if (l.id == id) {
            return &l;
        }
    }
    return nullptr;
}

void Topology::validate() const
{
    std::set<LinkId> seen;
    for (const auto& l : links) {
        std::ostringstream os;
        os << "link " << l.id << ": ";
        if (!seen.insert(l.id).second) {
            throw InvalidTopology(os.str() + "duplicate link id");
        }
        if (!has_router(l.a) || !has_router(l.b)) {
            throw InvalidTopology(os.str() + "endpoint is not a declared router");
        }
        if (l.a == l.b) {
            throw InvalidTopology(os.str() + "self-loop");
        }
        if (l.metrics.capacity_kbps <= 0 || l.metrics.delay_ms < 0 || l.metrics.reserved_kbps != 0) {
            throw InvalidTopology(os.str() + "invalid metrics");
        }
    }
}

Topology parse_topology(std::istream& in, const std::string& source)
{
    Topology topo;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = tokenize(line);
        if (t.empty()) {
            continue;
        }
        if (t[0] == "node") {
            if (t.size() != 2) {
                fail<InvalidTopology>(source, lineno, "expected 'node <id>'");
            }
            const auto id = field<InvalidTopology>(source, lineno, t[1], "node id", 0);
            if (id > kMaxId) {
                fail<InvalidTopology>(source, lineno, "node id out of range");
            }
            if (!topo.routers.insert(router_id(id)).second) {
                fail<InvalidTopology>(source, lineno, "duplicate node " + t[1]);
            }
        } else if (t[0] == "link") {
            if (t.size() != 5) {
                fail<InvalidTopology>(source, lineno,
                                      "expected 'link <id_a> <id_b> <capacity_kbps> <delay_ms>'");
            }
            const auto a = field<InvalidTopology>(source, lineno, t[1], "endpoint", 0);
            const auto b = field<InvalidTopology>(source, lineno, t[2], "endpoint", 0);
            const auto cap = field<InvalidTopology>(source, lineno, t[3], "capacity_kbps", 1);
            const auto delay = field<InvalidTopology>(source, lineno, t[4], "delay_ms", 0);
            if (a > kMaxId || !topo.has_router(router_id(a))) {
                fail<InvalidTopology>(source, lineno, "unknown router " + t[1]);
            }
            if (b > kMaxId || !topo.has_router(router_id(b))) {
                fail<InvalidTopology>(source, lineno, "unknown router " + t[2]);
            }
            if (a == b) {
                fail<InvalidTopology>(source, lineno, "link endpoints must differ");
            }
            const LinkId id{static_cast<std::uint32_t>(topo.links.size())};
            topo.links.push_back(TopologyLink{id, router_id(a), router_id(b), LinkMetrics{delay, cap, 0}});
        } else {
            fail<InvalidTopology>(source, lineno, "unknown directive '" + t[0] + "'");
        }
    }
    topo.validate();
    return topo;
}

Topology load_topology(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidTopology("cannot open topology file " + path);
    }
    return parse_topology(in, path);
}

bool parse_seconds(const std::string& text, std::int64_t& micros)
{
    const auto dot = text.find('.');
    const std::string whole = text.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : text.substr(dot + 1);
    if (whole.empty() || frac.size() > 6 || (dot != std::string::npos && frac.empty())) {
        return false;
    }
    for (char c : whole + frac) {
        if (c < '0' || c > '9') {
            return false;
        }
    }
    std::int64_t w = 0;
    if (!parse_int(whole, w) || w > 9'000'000'000LL) {
        return false;
    }
    frac.resize(6, '0');
    std::int64_t f = 0;
    parse_int(frac, f);
    micros = w * 1'000'000 + f;
    return true;
}

void Scenario::validate(const Topology& topology) const
{
    std::set<ConnectionId> ids;
    for (const auto& c : connections) {
        std::ostringstream os;
        os << "conn " << c.conn << ": ";
        if (!ids.insert(c.conn).second) {
            throw ScenarioError(os.str() + "duplicate connection id");
        }
        if (!topology.has_router(c.src) || !topology.has_router(c.dst)) {
            throw ScenarioError(os.str() + "unknown router");
        }
        if (c.duration_us <= 0) {
            throw ScenarioError(os.str() + "duration must be positive");
        }
        if (c.cbr_kbps > c.qos.bandwidth_kbps) {
            throw ScenarioError(os.str() + "cbr_kbps exceeds the requested bandwidth");
        }
    }
}

Scenario parse_scenario(std::istream& in, const Topology& topology, const std::string& source)
{
    Scenario scn;
    std::set<ConnectionId> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = tokenize(line);
        if (t.empty()) {
            continue;
        }
        if (t[0] != "conn") {
            fail<ScenarioError>(source, lineno, "unknown directive '" + t[0] + "'");
        }
        if (t.size() != 10) {
            fail<ScenarioError>(source, lineno,
                                "expected 'conn <id> <src> <dst> <bw_kbps> <max_delay_ms|-> "
                                "<start_s> <duration_s> <cbr_kbps> <pkt_bytes>'");
        }
        ConnectionSpec c;
        const auto id = field<ScenarioError>(source, lineno, t[1], "connection id", 0);
        const auto src = field<ScenarioError>(source, lineno, t[2], "src", 0);
        const auto dst = field<ScenarioError>(source, lineno, t[3], "dst", 0);
        if (id > kMaxId) {
            fail<ScenarioError>(source, lineno, "connection id out of range");
        }
        c.conn = ConnectionId{static_cast<std::uint32_t>(id)};
        if (src > kMaxId || !topology.has_router(router_id(src))) {
            fail<ScenarioError>(source, lineno, "unknown router " + t[2]);
        }
        if (dst > kMaxId || !topology.has_router(router_id(dst))) {
            fail<ScenarioError>(source, lineno, "unknown router " + t[3]);
        }
        if (!ids.insert(c.conn).second) {
            fail<ScenarioError>(source, lineno, "duplicate connection id " + t[1]);
        }
        c.src = router_id(src);
        c.dst = router_id(dst);
        c.qos.bandwidth_kbps = field<ScenarioError>(source, lineno, t[4], "bw_kbps", 1);
        if (t[5] != "-") {
            c.qos.max_delay_ms = field<ScenarioError>(source, lineno, t[5], "max_delay_ms", 1);
        }
        if (!parse_seconds(t[6], c.start_us)) {
            fail<ScenarioError>(source, lineno, "start_s must be a non-negative number, got '" + t[6] + "'");
        }
        if (!parse_seconds(t[7], c.duration_us) || c.duration_us == 0) {
            fail<ScenarioError>(source, lineno, "duration_s must be a positive number, got '" + t[7] + "'");
        }
        c.cbr_kbps = field<ScenarioError>(source, lineno, t[8], "cbr_kbps", 1);
        c.pkt_bytes = field<ScenarioError>(source, lineno, t[9], "pkt_bytes", 1);
        if (c.cbr_kbps > c.qos.bandwidth_kbps) {
            fail<ScenarioError>(source, lineno, "cbr_kbps exceeds bw_kbps");
        }
        scn.connections.push_back(c);
    }
    return scn;
}

Scenario load_scenario(const std::string& path, const Topology& topology)
{
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError("cannot open scenario file " + path);
    }
    return parse_scenario(in, topology, path);
}

std::string write_topology(const Topology& topology)
{
    std::ostringstream os;
    for (RouterId r : topology.routers) {
        os << "node " << r << "\n";
    }
    for (const auto& l : topology.links) {
        os << "link " << l.a << " " << l.b << " " << l.metrics.capacity_kbps << " "
           << l.metrics.delay_ms << "\n";
    }
    return os.str();
}

Topology generate_topology(const GenParams& p)
{
    if (p.nodes < 1) {
        throw InvalidParams("node count must be at least 1");
    }
    if (p.capacity_min_kbps < 1 || p.capacity_max_kbps < p.capacity_min_kbps ||
        p.delay_min_ms < 0 || p.delay_max_ms < p.delay_min_ms) {
        throw InvalidParams("capacity/delay ranges are empty or negative");
    }

    // mt19937_64 output is fully specified; the standard distributions are
    // not, so values are mapped by hand to stay identical across platforms.
    std::mt19937_64 rng(p.seed);
    auto uniform = [&rng](std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(rng() % span);
    };

    Topology topo;
    for (std::uint32_t i = 0; i < p.nodes; ++i) {
        topo.routers.insert(RouterId{i});
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    auto add = [&](std::uint32_t a, std::uint32_t b) {
        const LinkId id{static_cast<std::uint32_t>(topo.links.size())};
        LinkMetrics m{uniform(p.delay_min_ms, p.delay_max_ms),
                      uniform(p.capacity_min_kbps, p.capacity_max_kbps), 0};
        topo.links.push_back(TopologyLink{id, RouterId{a}, RouterId{b}, m});
        edges.insert({std::min(a, b), std::max(a, b)});
    };

    for (std::uint32_t i = 1; i < p.nodes; ++i) {
        add(static_cast<std::uint32_t>(uniform(0, i - 1)), i);
    }
    const std::uint64_t max_edges = static_cast<std::uint64_t>(p.nodes) * (p.nodes - 1) / 2;
    const std::uint64_t target =
        std::min<std::uint64_t>(max_edges, static_cast<std::uint64_t>(p.nodes) * p.degree / 2);
    std::uint64_t attempts = 0;
    while (edges.size() < target && attempts < 100 * max_edges + 100) {
        ++attempts;
        auto a = static_cast<std::uint32_t>(uniform(0, p.nodes - 1));
        auto b = static_cast<std::uint32_t>(uniform(0, p.nodes - 1));
        if (a == b || edges.contains({std::min(a, b), std::max(a, b)})) {
            continue;
        }
        add(a, b);
    }
    return topo;
}

}  // namespace qosip
