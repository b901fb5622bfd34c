#include "qosip/metrics.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace qosip {

const char* to_string(Outcome outcome)
{
    switch (outcome) {
    case Outcome::Pending: return "Pending";
    case Outcome::Accepted: return "Accepted";
    case Outcome::Blocked: return "Blocked";
    case Outcome::Failed: return "Failed";
    }
    return "?";
}

const char* to_string(TraceKind kind)
{
    switch (kind) {
    case TraceKind::Send: return "send";
    case TraceKind::Receive: return "recv";
    case TraceKind::Timer: return "timer";
    case TraceKind::Accept: return "accept";
    case TraceKind::Block: return "block";
    case TraceKind::Reserve: return "reserve";
    case TraceKind::Release: return "release";
    case TraceKind::Deliver: return "deliver";
    case TraceKind::Drop: return "drop";
    }
    return "?";
}

void Counters::count_send(const Message& msg)
{
    auto& mc = messages[msg.kind()];
    ++mc.count;
    mc.bytes += nominal_bytes(msg);
    if (msg.kind() == MessageKind::Update) {
        ++(msg.as<UpdateMsg>().triggered ? triggered_updates : boot_updates);
    } else if (msg.kind() == MessageKind::LinkState) {
        ++(msg.as<LinkStateMsg>().triggered ? triggered_link_states : boot_link_states);
    }
}

std::int64_t Counters::sent(MessageKind kind) const
{
    auto it = messages.find(kind);
    return it == messages.end() ? 0 : it->second.count;
}

std::int64_t Counters::total_computations() const
{
    std::int64_t n = 0;
    for (const auto& [r, c] : routers) {
        n += c.computations;
    }
    return n;
}

std::int64_t Counters::with_outcome(Outcome outcome) const
{
    std::int64_t n = 0;
    for (const auto& [id, c] : connections) {
        n += c.outcome == outcome ? 1 : 0;
    }
    return n;
}

double blocking_rate(const Counters& counters)
{
    if (counters.attempted() == 0) {
        throw NoConnections("no connections were attempted");
    }
    const auto bad = counters.with_outcome(Outcome::Blocked) + counters.with_outcome(Outcome::Failed);
    return static_cast<double>(bad) / static_cast<double>(counters.attempted());
}

// ---------------------------------------------------------------------------

void ThroughputSeries::add(RouterId node, std::int64_t time_us, std::int64_t bytes)
{
    buckets_[node][time_us / 1'000'000] += bytes;
}

std::int64_t ThroughputSeries::total(RouterId node) const
{
    std::int64_t n = 0;
    if (auto it = buckets_.find(node); it != buckets_.end()) {
        for (const auto& [t, b] : it->second) {
            n += b;
        }
    }
    return n;
}

std::int64_t ThroughputSeries::total() const
{
    std::int64_t n = 0;
    for (const auto& [node, _] : buckets_) {
        n += total(node);
    }
    return n;
}

std::map<std::int64_t, std::int64_t> ThroughputSeries::buckets(RouterId node) const
{
    std::map<std::int64_t, std::int64_t> out;
    auto it = buckets_.find(node);
    if (it == buckets_.end() || it->second.empty()) {
        return out;
    }
    const auto first = it->second.begin()->first;
    const auto last = it->second.rbegin()->first;
    for (auto t = first; t <= last; ++t) {
        auto b = it->second.find(t);
        out[t] = b == it->second.end() ? 0 : b->second;
    }
    return out;
}

std::vector<RouterId> ThroughputSeries::nodes() const
{
    std::vector<RouterId> out;
    for (const auto& [node, _] : buckets_) {
        out.push_back(node);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void mix(std::uint64_t& h, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= 1099511628211ULL;
    }
}

}  // namespace

std::uint64_t EventTrace::hash() const
{
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& r : records) {
        mix(h, static_cast<std::uint64_t>(r.time_us));
        mix(h, r.seq);
        mix(h, static_cast<std::uint64_t>(r.kind));
        mix(h, r.router.value);
        mix(h, r.peer ? r.peer->value + 1ULL : 0);
        mix(h, r.link ? r.link->value + 1ULL : 0);
        mix(h, r.message ? static_cast<std::uint64_t>(*r.message) + 1 : 0);
        mix(h, r.conn ? r.conn->value + 1ULL : 0);
        mix(h, r.path.size());
        for (RouterId hop : r.path) {
            mix(h, hop.value);
        }
        mix(h, static_cast<std::uint64_t>(r.value));
    }
    return h;
}

std::string format_fixed3(std::int64_t thousandths)
{
    std::ostringstream os;
    if (thousandths < 0) {
        os << '-';
        thousandths = -thousandths;
    }
    os << thousandths / 1000 << '.';
    const auto frac = thousandths % 1000;
    os << (frac < 100 ? "0" : "") << (frac < 10 ? "0" : "") << frac;
    return os.str();
}

std::string format_ratio(std::int64_t num, std::int64_t den)
{
    if (den == 0) {
        return "";
    }
    // Six decimals, rounded half up, integer arithmetic only.
    const std::int64_t scaled = (num * 2'000'000 + den) / (2 * den);
    std::ostringstream os;
    os << scaled / 1'000'000 << '.';
    const auto frac = std::to_string(scaled % 1'000'000);
    os << std::string(6 - frac.size(), '0') << frac;
    return os.str();
}

std::string throughput_csv(const ThroughputSeries& series)
{
    std::map<std::pair<std::int64_t, RouterId>, std::int64_t> rows;
    for (RouterId node : series.nodes()) {
        for (const auto& [t, b] : series.buckets(node)) {
            rows[{t, node}] = b;
        }
    }
    std::ostringstream os;
    os << "time_s,node,bytes\n";
    for (const auto& [key, bytes] : rows) {
        os << key.first << ',' << key.second << ',' << bytes << '\n';
    }
    return os.str();
}

std::string messages_csv(const Counters& counters)
{
    std::ostringstream os;
    os << "variant,count,bytes\n";
    for (MessageKind k : kAllMessageKinds) {
        auto it = counters.messages.find(k);
        if (it != counters.messages.end() && it->second.count > 0) {
            os << to_string(k) << ',' << it->second.count << ',' << it->second.bytes << '\n';
        }
    }
    return os.str();
}

std::string connections_csv(const Counters& counters)
{
    std::ostringstream os;
    os << "conn,src,dst,outcome,path,setup_ms\n";
    for (const auto& [id, c] : counters.connections) {
        os << id << ',' << c.src << ',' << c.dst << ',' << to_string(c.outcome) << ','
           << (c.path ? format_hops(c.path->hops) : "") << ','
           << (c.setup_us ? format_fixed3(*c.setup_us) : "") << '\n';
    }
    return os.str();
}

std::string routers_csv(const Counters& counters)
{
    std::ostringstream os;
    os << "router,events,computations\n";
    for (const auto& [r, c] : counters.routers) {
        os << r << ',' << c.events << ',' << c.computations << '\n';
    }
    return os.str();
}

std::string trace_csv(const EventTrace& trace)
{
    std::ostringstream os;
    os << "time_us,seq,kind,router,peer,link,message,conn,path,value\n";
    for (const auto& r : trace.records) {
        os << r.time_us << ',' << r.seq << ',' << to_string(r.kind) << ',' << r.router << ',';
        if (r.peer) {
            os << *r.peer;
        }
        os << ',';
        if (r.link) {
            os << *r.link;
        }
        os << ',' << (r.message ? to_string(*r.message) : "") << ',';
        if (r.conn) {
            os << *r.conn;
        }
        os << ',' << format_hops(r.path) << ',' << r.value << '\n';
    }
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

void export_csv(const Counters& counters, const ThroughputSeries& series,
                const std::filesystem::path& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    }
    write_file(out_dir / "throughput.csv", throughput_csv(series));
    write_file(out_dir / "messages.csv", messages_csv(counters));
    write_file(out_dir / "connections.csv", connections_csv(counters));
    write_file(out_dir / "routers.csv", routers_csv(counters));
}

}  // namespace qosip
