#include "qosip/tables.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

namespace qosip {

std::int64_t class_of(std::int64_t residual_kbps, ClassPolicy policy)
{
    if (residual_kbps <= 0) {
        return 0;
    }
    return residual_kbps / policy.class_width_kbps;
}

bool should_trigger(std::int64_t old_kbps, std::int64_t new_kbps, ClassPolicy policy)
{
    return class_of(old_kbps, policy) != class_of(new_kbps, policy);
}

bool should_trigger(std::int64_t old_kbps, std::int64_t new_kbps, ClassPolicy policy,
                    TriggerMode mode)
{
    if (mode == TriggerMode::EveryChange) {
        return old_kbps != new_kbps;
    }
    return should_trigger(old_kbps, new_kbps, policy);
}

// ---------------------------------------------------------------------------

bool NeighborTable::set_metrics(LinkId link, const LinkMetrics& metrics)
{
    auto it = entries_.find(link);
    if (it == entries_.end()) {
        return false;
    }
    it->second.metrics = metrics;
    return true;
}

const NtEntry* NeighborTable::find(LinkId link) const
{
    auto it = entries_.find(link);
    return it == entries_.end() ? nullptr : &it->second;
}

bool NeighborTable::has_neighbor(RouterId r) const
{
    return std::any_of(entries_.begin(), entries_.end(),
                       [r](const auto& kv) { return kv.second.neighbor == r; });
}

std::vector<NtEntry> NeighborTable::links_to(RouterId r) const
{
    std::vector<NtEntry> out;
    for (const auto& [id, e] : entries_) {
        if (e.neighbor == r) {
            out.push_back(e);
        }
    }
    return out;
}

std::vector<RouterId> NeighborTable::neighbors() const
{
    std::set<RouterId> s;
    for (const auto& [id, e] : entries_) {
        s.insert(e.neighbor);
    }
    return {s.begin(), s.end()};
}

const NtEntry* NeighborTable::widest_link_to(RouterId r) const
{
    const NtEntry* best = nullptr;
    for (const auto& [id, e] : entries_) {
        if (e.neighbor != r) {
            continue;
        }
        if (best == nullptr ||
            std::make_tuple(-e.metrics.residual_kbps(), e.metrics.delay_ms, e.link) <
                std::make_tuple(-best->metrics.residual_kbps(), best->metrics.delay_ms,
                                best->link)) {
            best = &e;
        }
    }
    return best;
}

const NtEntry* NeighborTable::control_link_to(RouterId r) const
{
    const NtEntry* best = nullptr;
    for (const auto& [id, e] : entries_) {
        if (e.neighbor == r && (best == nullptr || e.metrics.delay_ms < best->metrics.delay_ms)) {
            best = &e;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------

std::vector<SntEntry> SecondNeighborTable::entries() const
{
    std::vector<SntEntry> out;
    out.reserve(rows_.size());
    for (const auto& [k, row] : rows_) {
        out.push_back(row.entry);
    }
    return out;
}

std::vector<SntEntry> SecondNeighborTable::to(RouterId second) const
{
    std::vector<SntEntry> out;
    for (const auto& [k, row] : rows_) {
        if (k.second == second) {
            out.push_back(row.entry);
        }
    }
    return out;
}

std::vector<SntEntry> SecondNeighborTable::via(RouterId neighbor) const
{
    std::vector<SntEntry> out;
    for (const auto& [k, row] : rows_) {
        if (k.first == neighbor) {
            out.push_back(row.entry);
        }
    }
    return out;
}

bool SecondNeighborTable::has_second(RouterId r) const
{
    return std::any_of(rows_.begin(), rows_.end(),
                       [r](const auto& kv) { return kv.first.second == r; });
}

void SecondNeighborTable::refresh_first_hop(RouterId neighbor, const NtEntry& first)
{
    for (auto& [k, row] : rows_) {
        if (k.first != neighbor) {
            continue;
        }
        row.entry.first_link = first.link;
        row.entry.agg_delay_ms = first.metrics.delay_ms + row.advertised_delay_ms;
        row.entry.agg_bottleneck_kbps =
            std::min(first.metrics.residual_kbps(), row.advertised_residual_kbps);
    }
}

// ---------------------------------------------------------------------------

Message build_hello(RouterId owner)
{
    return Message{HelloMsg{owner}};
}

Message build_update(RouterId owner, const NeighborTable& nt, bool triggered)
{
    if (nt.empty()) {
        std::ostringstream os;
        os << "router " << owner << " has an empty neighbor table";
        throw EmptyTable(os.str());
    }
    UpdateMsg u;
    u.origin = owner;
    u.triggered = triggered;
    for (const auto& [id, e] : nt.entries()) {
        u.advertised_neighbors.push_back({e.neighbor, e.metrics});
    }
    return Message{std::move(u)};
}

SecondNeighborTable apply_update(const SecondNeighborTable& snt, const NeighborTable& nt,
                                 RouterId from, LinkId via_link, const LinkMetrics& via_metrics,
                                 const UpdateMsg& update, RouterId owner)
{
    if (!nt.has_neighbor(from)) {
        std::ostringstream os;
        os << "router " << owner << " got an update from non-neighbor " << from;
        throw UnknownNeighbor(os.str());
    }

    // Parallel links at the advertiser collapse to the widest one.
    std::map<RouterId, LinkMetrics> advertised;
    for (const auto& adv : update.advertised_neighbors) {
        if (adv.neighbor == owner) {
            continue;
        }
        auto [it, inserted] = advertised.emplace(adv.neighbor, adv.metrics);
        if (!inserted) {
            const auto& cur = it->second;
            if (std::make_pair(-adv.metrics.residual_kbps(), adv.metrics.delay_ms) <
                std::make_pair(-cur.residual_kbps(), cur.delay_ms)) {
                it->second = adv.metrics;
            }
        }
    }

    SecondNeighborTable out = snt;
    auto& rows = out.rows();
    std::erase_if(rows, [from](const auto& kv) { return kv.first.first == from; });
    for (const auto& [second, m] : advertised) {
        SecondNeighborTable::Row row;
        row.entry.first_link = via_link;
        row.entry.neighbor = from;
        row.entry.second_neighbor = second;
        row.entry.agg_delay_ms = via_metrics.delay_ms + m.delay_ms;
        row.entry.agg_bottleneck_kbps = std::min(via_metrics.residual_kbps(), m.residual_kbps());
        row.advertised_delay_ms = m.delay_ms;
        row.advertised_residual_kbps = m.residual_kbps();
        rows.emplace(SecondNeighborTable::Key{from, second}, row);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

bool admits(std::int64_t residual, std::int64_t delay, const QosRequest& qos,
            std::int64_t accumulated)
{
    return residual >= qos.bandwidth_kbps && qos.admits_delay(accumulated + delay);
}

}  // namespace

std::vector<NtEntry> eligible_first_hops(const NeighborTable& nt, const QosRequest& qos,
                                         std::int64_t accumulated_delay_ms, ClassPolicy policy)
{
    std::vector<NtEntry> out;
    for (const auto& [id, e] : nt.entries()) {
        if (admits(e.metrics.residual_kbps(), e.metrics.delay_ms, qos, accumulated_delay_ms)) {
            out.push_back(e);
        }
    }
    std::sort(out.begin(), out.end(), [policy](const NtEntry& a, const NtEntry& b) {
        return std::make_tuple(class_of(a.metrics.residual_kbps(), policy), a.metrics.delay_ms,
                               a.neighbor, a.link) <
               std::make_tuple(class_of(b.metrics.residual_kbps(), policy), b.metrics.delay_ms,
                               b.neighbor, b.link);
    });
    return out;
}

NtEntry best_fit_link(const std::vector<NtEntry>& candidates, const QosRequest& /*qos*/,
                      ClassPolicy policy)
{
    if (candidates.empty()) {
        throw NoCandidate("no eligible link to choose from");
    }
    return *std::min_element(candidates.begin(), candidates.end(),
                             [policy](const NtEntry& a, const NtEntry& b) {
                                 return std::make_tuple(class_of(a.metrics.residual_kbps(), policy),
                                                        a.metrics.delay_ms, a.neighbor, a.link) <
                                        std::make_tuple(class_of(b.metrics.residual_kbps(), policy),
                                                        b.metrics.delay_ms, b.neighbor, b.link);
                             });
}

NtEntry widest_link(const std::vector<NtEntry>& candidates)
{
    if (candidates.empty()) {
        throw NoCandidate("no eligible link to choose from");
    }
    return *std::min_element(candidates.begin(), candidates.end(),
                             [](const NtEntry& a, const NtEntry& b) {
                                 return std::make_tuple(-a.metrics.residual_kbps(),
                                                        a.metrics.delay_ms, a.neighbor, a.link) <
                                        std::make_tuple(-b.metrics.residual_kbps(),
                                                        b.metrics.delay_ms, b.neighbor, b.link);
                             });
}

NtEntry choose_link(const std::vector<NtEntry>& candidates, const QosRequest& qos,
                    ClassPolicy policy, LinkChoice choice)
{
    return choice == LinkChoice::Widest ? widest_link(candidates)
                                        : best_fit_link(candidates, qos, policy);
}

std::vector<SntEntry> eligible_two_hop(const SecondNeighborTable& snt, RouterId destination,
                                       const QosRequest& qos, std::int64_t accumulated_delay_ms,
                                       ClassPolicy policy)
{
    std::vector<SntEntry> out;
    for (const auto& e : snt.to(destination)) {
        if (admits(e.agg_bottleneck_kbps, e.agg_delay_ms, qos, accumulated_delay_ms)) {
            out.push_back(e);
        }
    }
    std::sort(out.begin(), out.end(), [policy](const SntEntry& a, const SntEntry& b) {
        return std::make_tuple(class_of(a.agg_bottleneck_kbps, policy), a.agg_delay_ms,
                               a.neighbor) <
               std::make_tuple(class_of(b.agg_bottleneck_kbps, policy), b.agg_delay_ms,
                               b.neighbor);
    });
    return out;
}

}  // namespace qosip
