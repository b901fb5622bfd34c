// Shared vocabulary: identifiers, QoS requests, link metrics, path records
// and the message taxonomy exchanged between routers.
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qosip {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A probe would revisit a router already on its recorded path.
class LoopDetected : public Error {
public:
    using Error::Error;
};

template <class Tag>
struct StrongId {
    std::uint32_t value{0};

    constexpr auto operator<=>(const StrongId&) const = default;
};

template <class Tag>
std::ostream& operator<<(std::ostream& os, StrongId<Tag> id)
{
    return os << id.value;
}

using RouterId = StrongId<struct RouterIdTag>;
using ConnectionId = StrongId<struct ConnectionIdTag>;
using LinkId = StrongId<struct LinkIdTag>;

struct QosRequest {
    std::int64_t bandwidth_kbps{1};
    std::optional<std::int64_t> max_delay_ms;  // nullopt = unbounded

    bool admits_delay(std::int64_t total_delay_ms) const
    {
        return !max_delay_ms || total_delay_ms <= *max_delay_ms;
    }
    bool operator==(const QosRequest&) const = default;
};

struct LinkMetrics {
    std::int64_t delay_ms{0};
    std::int64_t capacity_kbps{1};
    std::int64_t reserved_kbps{0};

    std::int64_t residual_kbps() const { return capacity_kbps - reserved_kbps; }
    bool operator==(const LinkMetrics&) const = default;
};

/// Routers visited by a probe plus the additive delay and bottleneck
/// residual of the links between them.
struct PathRecord {
    std::vector<RouterId> hops;
    std::int64_t total_delay_ms{0};
    std::optional<std::int64_t> bottleneck_kbps;  // unset while no link traversed

    bool contains(RouterId r) const;
    /// Index of `r` in hops, or nullopt.
    std::optional<std::size_t> position_of(RouterId r) const;
    bool operator==(const PathRecord&) const = default;
};

/// Path seeded with a single router (the probe origin).
PathRecord seed_path(RouterId origin);

/// Appends `next`, reached over `link`. Throws LoopDetected if `next` is
/// already on the path.
PathRecord extend_path(const PathRecord& record, const LinkMetrics& link, RouterId next);

std::string format_hops(const std::vector<RouterId>& hops);

// ---------------------------------------------------------------------------
// Messages

struct AdvertisedNeighbor {
    RouterId neighbor;
    LinkMetrics metrics;
    bool operator==(const AdvertisedNeighbor&) const = default;
};

struct HelloMsg {
    RouterId origin;
};

struct UpdateMsg {
    RouterId origin;
    std::vector<AdvertisedNeighbor> advertised_neighbors;
    bool triggered{false};  // false for boot-time / new-neighbor updates
};

struct ProbeMsg {
    ConnectionId conn;
    RouterId destination;
    QosRequest qos;
    PathRecord path;
    // Source-routed probes (baseline) carry the full route to follow.
    std::optional<std::vector<RouterId>> explicit_route;
};

struct AckMsg {
    ConnectionId conn;
    QosRequest qos;
    PathRecord path;
};

struct NackMsg {
    ConnectionId conn;
    PathRecord path;
    bool ack_phase{false};
};

struct FailureMsg {
    ConnectionId conn;
    PathRecord path;
};

struct TeardownMsg {
    ConnectionId conn;
};

struct DataMsg {
    ConnectionId conn;
    std::int64_t payload_bytes{1};
};

struct LinkStateAdvert {
    LinkId link;
    RouterId endpoint_a;
    RouterId endpoint_b;
    LinkMetrics metrics;
    std::uint64_t version{0};
    bool operator==(const LinkStateAdvert&) const = default;
};

struct LinkStateMsg {
    RouterId origin;
    LinkStateAdvert advert;
    bool triggered{false};
};

enum class MessageKind { Hello, Update, Probe, Ack, Nack, Failure, Teardown, Data, LinkState };

inline constexpr MessageKind kAllMessageKinds[] = {
    MessageKind::Hello, MessageKind::Update,   MessageKind::Probe,
    MessageKind::Ack,   MessageKind::Nack,     MessageKind::Failure,
    MessageKind::Teardown, MessageKind::Data,  MessageKind::LinkState};

const char* to_string(MessageKind kind);

struct Message {
    std::variant<HelloMsg, UpdateMsg, ProbeMsg, AckMsg, NackMsg, FailureMsg, TeardownMsg,
                 DataMsg, LinkStateMsg>
        body;

    MessageKind kind() const { return static_cast<MessageKind>(body.index()); }
    std::optional<ConnectionId> conn() const;
    /// Path carried by Probe/Ack/Nack/Failure.
    const PathRecord* path() const;

    template <class T>
    const T& as() const
    {
        return std::get<T>(body);
    }
};

/// Nominal on-wire size used for overhead accounting: Hello 16, Update
/// 16 + 12 per neighbor, Probe/Ack/Nack/Failure 32 + 4 per hop, Teardown 16,
/// LinkState 28, Data = payload.
std::int64_t nominal_bytes(const Message& msg);

}  // namespace qosip
