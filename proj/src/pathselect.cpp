#include "qosip/pathselect.hpp"

#include <algorithm>

namespace qosip {

bool is_feasible(const PathRecord& path, const QosRequest& qos)
{
    // A single-router path has no links and trivially fits.
    if (path.bottleneck_kbps && *path.bottleneck_kbps < qos.bandwidth_kbps) {
        return false;
    }
    return qos.admits_delay(path.total_delay_ms);
}

std::vector<PathRecord> rank_paths(const CandidateSet& set)
{
    std::vector<PathRecord> out;
    for (const auto& p : set.candidates) {
        if (is_feasible(p, set.qos)) {
            out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end(), [](const PathRecord& a, const PathRecord& b) {
        if (a.total_delay_ms != b.total_delay_ms) {
            return a.total_delay_ms < b.total_delay_ms;
        }
        const auto wa = a.bottleneck_kbps.value_or(0);
        const auto wb = b.bottleneck_kbps.value_or(0);
        if (wa != wb) {
            return wa > wb;
        }
        return a.hops < b.hops;
    });
    return out;
}

std::optional<PathRecord> select_best(const CandidateSet& set)
{
    auto ranked = rank_paths(set);
    if (ranked.empty()) {
        return std::nullopt;
    }
    return std::move(ranked.front());
}

}  // namespace qosip
