// Per-router one-hop (NT) and two-hop (SNT) state, class-based update
// triggering and the eligibility / best-fit link queries built on them.
#pragma once

#include "qosip/model.hpp"

#include <map>
#include <utility>
#include <vector>

namespace qosip {

class EmptyTable : public Error {
public:
    using Error::Error;
};
class UnknownNeighbor : public Error {
public:
    using Error::Error;
};
class NoCandidate : public Error {
public:
    using Error::Error;
};

/// Width of the residual-bandwidth classes: class k covers [k*B, (k+1)*B).
struct ClassPolicy {
    std::int64_t class_width_kbps{100};
};

enum class TriggerMode {
    ClassBoundary,  // update only when the residual changes class
    EveryChange,    // instrumentation: update on any residual change
};

/// How a router picks among several eligible links to the same neighbor.
enum class LinkChoice {
    BestFit,  // tightest class that still fits
    Widest,   // greedy: largest residual (comparison only)
};

std::int64_t class_of(std::int64_t residual_kbps, ClassPolicy policy);
bool should_trigger(std::int64_t old_kbps, std::int64_t new_kbps, ClassPolicy policy);
bool should_trigger(std::int64_t old_kbps, std::int64_t new_kbps, ClassPolicy policy,
                    TriggerMode mode);

struct NtEntry {
    LinkId link;
    RouterId neighbor;
    LinkMetrics metrics;
    bool operator==(const NtEntry&) const = default;
};

class NeighborTable {
public:
    void upsert(const NtEntry& entry) { entries_[entry.link] = entry; }
    bool set_metrics(LinkId link, const LinkMetrics& metrics);

    const NtEntry* find(LinkId link) const;
    bool has_neighbor(RouterId r) const;
    /// All links to `r`, ordered by link id.
    std::vector<NtEntry> links_to(RouterId r) const;
    /// Distinct neighbors in ascending id order.
    std::vector<RouterId> neighbors() const;
    /// Largest residual, then smallest delay, then smallest link id.
    const NtEntry* widest_link_to(RouterId r) const;
    /// Link used for control traffic to `r`: smallest delay, then link id.
    const NtEntry* control_link_to(RouterId r) const;

    const std::map<LinkId, NtEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

private:
    std::map<LinkId, NtEntry> entries_;
};

struct SntEntry {
    LinkId first_link;
    RouterId neighbor;
    RouterId second_neighbor;
    std::int64_t agg_delay_ms{0};
    std::int64_t agg_bottleneck_kbps{0};
    bool operator==(const SntEntry&) const = default;
};

class SecondNeighborTable {
public:
    struct Row {
        SntEntry entry;
        // Metrics of the neighbor->second link as last advertised.
        std::int64_t advertised_delay_ms{0};
        std::int64_t advertised_residual_kbps{0};
        bool operator==(const Row&) const = default;
    };
    using Key = std::pair<RouterId, RouterId>;  // (neighbor, second neighbor)

    std::vector<SntEntry> entries() const;
    std::vector<SntEntry> to(RouterId second) const;
    std::vector<SntEntry> via(RouterId neighbor) const;
    bool has_second(RouterId r) const;
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }

    const std::map<Key, Row>& rows() const { return rows_; }
    std::map<Key, Row>& rows() { return rows_; }

    /// Recomputes aggregates of every entry through `neighbor` after the
    /// owner's own link to it changed.
    void refresh_first_hop(RouterId neighbor, const NtEntry& first);

    bool operator==(const SecondNeighborTable&) const = default;

private:
    std::map<Key, Row> rows_;
};

Message build_hello(RouterId owner);

/// Snapshot of the NT as an Update. Throws EmptyTable when the NT is empty.
Message build_update(RouterId owner, const NeighborTable& nt, bool triggered);

/// Folds an Update from neighbor `from` (received over `via_link` whose
/// current metrics are `via_metrics`) into the SNT of `owner`. Updates
/// replace everything previously learned through `from`.
SecondNeighborTable apply_update(const SecondNeighborTable& snt, const NeighborTable& nt,
                                 RouterId from, LinkId via_link, const LinkMetrics& via_metrics,
                                 const UpdateMsg& update, RouterId owner);

/// NT entries that can carry `qos` given the delay already accumulated,
/// ordered by (class asc, delay asc, neighbor asc, link asc).
std::vector<NtEntry> eligible_first_hops(const NeighborTable& nt, const QosRequest& qos,
                                         std::int64_t accumulated_delay_ms, ClassPolicy policy);

/// Tightest-class candidate; ties by delay, then neighbor id.
NtEntry best_fit_link(const std::vector<NtEntry>& candidates, const QosRequest& qos,
                      ClassPolicy policy);

/// Largest residual; ties by delay, then neighbor id.
NtEntry widest_link(const std::vector<NtEntry>& candidates);

NtEntry choose_link(const std::vector<NtEntry>& candidates, const QosRequest& qos,
                    ClassPolicy policy, LinkChoice choice);

/// SNT entries reaching `destination` whose aggregate metrics admit `qos`,
/// ordered as eligible_first_hops using the aggregates.
std::vector<SntEntry> eligible_two_hop(const SecondNeighborTable& snt, RouterId destination,
                                       const QosRequest& qos, std::int64_t accumulated_delay_ms,
                                       ClassPolicy policy);

}  // namespace qosip
