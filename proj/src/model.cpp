#include "qosip/model.hpp"

#include <algorithm>
#include <sstream>

namespace qosip {

bool PathRecord::contains(RouterId r) const
{
    return std::find(hops.begin(), hops.end(), r) != hops.end();
}

std::optional<std::size_t> PathRecord::position_of(RouterId r) const
{
    auto it = std::find(hops.begin(), hops.end(), r);
    if (it == hops.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - hops.begin());
}

PathRecord seed_path(RouterId origin)
{
    PathRecord p;
    p.hops.push_back(origin);
    return p;
}

PathRecord extend_path(const PathRecord& record, const LinkMetrics& link, RouterId next)
{
    if (record.contains(next)) {
        std::ostringstream os;
        os << "router " << next << " already on path " << format_hops(record.hops);
        throw LoopDetected(os.str());
    }
    PathRecord out = record;
    out.hops.push_back(next);
    out.total_delay_ms += link.delay_ms;
    const auto residual = link.residual_kbps();
    out.bottleneck_kbps = record.bottleneck_kbps ? std::min(*record.bottleneck_kbps, residual)
                                                 : residual;
    return out;
}

std::string format_hops(const std::vector<RouterId>& hops)
{
    std::string out;
    for (std::size_t i = 0; i < hops.size(); ++i) {
        if (i != 0) {
            out += '-';
        }
        out += std::to_string(hops[i].value);
    }
    return out;
}

const char* to_string(MessageKind kind)
{
    switch (kind) {
    case MessageKind::Hello: return "Hello";
    case MessageKind::Update: return "Update";
    case MessageKind::Probe: return "Probe";
    case MessageKind::Ack: return "Ack";
    case MessageKind::Nack: return "Nack";
    case MessageKind::Failure: return "Failure";
    case MessageKind::Teardown: return "Teardown";
    case MessageKind::Data: return "Data";
    case MessageKind::LinkState: return "LinkState";
    }
    return "?";
}

std::optional<ConnectionId> Message::conn() const
{
    return std::visit(
        [](const auto& m) -> std::optional<ConnectionId> {
            if constexpr (requires { m.conn; }) {
                return m.conn;
            } else {
                return std::nullopt;
            }
        },
        body);
}

const PathRecord* Message::path() const
{
    return std::visit(
        [](const auto& m) -> const PathRecord* {
            if constexpr (requires { m.path; }) {
                return &m.path;
            } else {
                return nullptr;
            }
        },
        body);
}

std::int64_t nominal_bytes(const Message& msg)
{
    switch (msg.kind()) {
    case MessageKind::Hello:
    case MessageKind::Teardown:
        return 16;
    case MessageKind::Update:
        return 16 + 12 * static_cast<std::int64_t>(msg.as<UpdateMsg>().advertised_neighbors.size());
    case MessageKind::Probe:
    case MessageKind::Ack:
    case MessageKind::Nack:
    case MessageKind::Failure:
        return 32 + 4 * static_cast<std::int64_t>(msg.path()->hops.size());
    case MessageKind::Data:
        return msg.as<DataMsg>().payload_bytes;
    case MessageKind::LinkState:
        return 28;
    }
    return 0;
}

}  // namespace qosip
