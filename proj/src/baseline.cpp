#include "qosip/baseline.hpp"

#include <limits>
#include <queue>
#include <set>
#include <tuple>

namespace qosip {

bool LinkStateDb::apply(const LinkStateAdvert& advert)
{
    auto it = links_.find(advert.link);
    if (it != links_.end() && it->second.version >= advert.version) {
        return false;
    }
    links_[advert.link] = advert;
    return true;
}

const LinkStateAdvert* LinkStateDb::find(LinkId link) const
{
    auto it = links_.find(link);
    return it == links_.end() ? nullptr : &it->second;
}

namespace {

std::vector<FloodSend> flood(const NeighborTable& nt, const LinkStateMsg& msg,
                             std::optional<RouterId> except)
{
    std::vector<FloodSend> out;
    for (RouterId n : nt.neighbors()) {
        if (except && n == *except) {
            continue;
        }
        out.push_back(FloodSend{n, nt.control_link_to(n)->link, msg});
    }
    return out;
}

}  // namespace

std::vector<FloodSend> ls_originate(RouterId origin, const NeighborTable& nt, LinkStateDb& db,
                                    const LinkStateAdvert& advert, bool triggered)
{
    db.apply(advert);
    return flood(nt, LinkStateMsg{origin, advert, triggered}, std::nullopt);
}

std::vector<FloodSend> ls_receive(RouterId /*self*/, const NeighborTable& nt, LinkStateDb& db,
                                  const LinkStateMsg& msg, RouterId arrived_from, bool& applied)
{
    applied = db.apply(msg.advert);
    if (!applied) {
        return {};
    }
    return flood(nt, msg, arrived_from);
}

std::optional<PathRecord> dijkstra_feasible(const LinkStateDb& db, RouterId src, RouterId dst,
                                            const QosRequest& qos, SearchStats* stats)
{
    if (src == dst) {
        return seed_path(src);
    }

    struct Edge {
        RouterId to;
        LinkMetrics metrics;
    };
    std::map<RouterId, std::vector<Edge>> adj;
    for (const auto& [id, adv] : db.links()) {
        if (adv.metrics.residual_kbps() < qos.bandwidth_kbps) {
            continue;
        }
        adj[adv.endpoint_a].push_back({adv.endpoint_b, adv.metrics});
        adj[adv.endpoint_b].push_back({adv.endpoint_a, adv.metrics});
    }

    constexpr auto kInf = std::numeric_limits<std::int64_t>::max();
    std::map<RouterId, std::int64_t> dist;
    std::map<RouterId, std::pair<RouterId, LinkMetrics>> pred;
    std::set<RouterId> done;
    using Item = std::pair<std::int64_t, RouterId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[src] = 0;
    queue.push({0, src});

    auto dist_of = [&](RouterId r) {
        auto it = dist.find(r);
        return it == dist.end() ? kInf : it->second;
    };

    while (!queue.empty()) {
        auto [d, u] = queue.top();
        queue.pop();
        if (!done.insert(u).second) {
            continue;
        }
        if (u == dst) {
            break;
        }
        for (const auto& e : adj[u]) {
            if (done.contains(e.to)) {
                continue;
            }
            if (stats != nullptr) {
                ++stats->edges_relaxed;
            }
            const auto nd = d + e.metrics.delay_ms;
            const auto cur = dist_of(e.to);
            bool better = nd < cur;
            if (!better && nd == cur) {
                // Equal delay: prefer the smaller predecessor, then the wider link.
                const auto& [pu, pm] = pred.at(e.to);
                better = std::make_tuple(u, -e.metrics.residual_kbps()) <
                         std::make_tuple(pu, -pm.residual_kbps());
            }
            if (better) {
                dist[e.to] = nd;
                pred[e.to] = {u, e.metrics};
                queue.push({nd, e.to});
            }
        }
    }

    if (dist_of(dst) == kInf || !qos.admits_delay(dist_of(dst))) {
        return std::nullopt;
    }

    std::vector<std::pair<RouterId, LinkMetrics>> reversed;
    for (RouterId r = dst; r != src; r = pred.at(r).first) {
        reversed.push_back({r, pred.at(r).second});
    }
    PathRecord path = seed_path(src);
    for (auto it = reversed.rbegin(); it != reversed.rend(); ++it) {
        path = extend_path(path, it->second, it->first);
    }
    return path;
}

}  // namespace qosip
