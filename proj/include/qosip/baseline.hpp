// Source-routing comparator: every router keeps a copy of every link's
// metrics, flooded network-wide whenever a residual changes, and the source
// runs a delay-shortest search over the links that fit the request.
#pragma once

#include "qosip/model.hpp"
#include "qosip/tables.hpp"

#include <map>
#include <optional>
#include <vector>

namespace qosip {

class LinkStateDb {
public:
    /// Stores `advert` if it is newer than what is held for its link.
    bool apply(const LinkStateAdvert& advert);
    const LinkStateAdvert* find(LinkId link) const;
    const std::map<LinkId, LinkStateAdvert>& links() const { return links_; }

private:
    std::map<LinkId, LinkStateAdvert> links_;
};

struct FloodSend {
    RouterId to;
    LinkId link;
    LinkStateMsg msg;
};

/// Origin side: record the change locally and send it to every neighbor.
std::vector<FloodSend> ls_originate(RouterId origin, const NeighborTable& nt, LinkStateDb& db,
                                    const LinkStateAdvert& advert, bool triggered);

/// Receiver side: apply a fresh advert and re-flood it to every neighbor
/// except the sender; stale or duplicate adverts are dropped. `applied` is
/// set when the local database changed.
std::vector<FloodSend> ls_receive(RouterId self, const NeighborTable& nt, LinkStateDb& db,
                                  const LinkStateMsg& msg, RouterId arrived_from, bool& applied);

struct SearchStats {
    std::int64_t edges_relaxed{0};
};

/// Minimum-delay path over links whose residual covers the request; none
/// when unreachable or when the best delay exceeds the bound.
std::optional<PathRecord> dijkstra_feasible(const LinkStateDb& db, RouterId src, RouterId dst,
                                            const QosRequest& qos, SearchStats* stats = nullptr);

}  // namespace qosip
