// Destination-side ranking of the candidate paths collected from probes.
#pragma once

#include "qosip/model.hpp"

#include <optional>
#include <vector>

namespace qosip {

struct CandidateSet {
    ConnectionId conn;
    QosRequest qos;
    std::vector<PathRecord> candidates;
    std::int64_t window_deadline_us{0};
};

bool is_feasible(const PathRecord& path, const QosRequest& qos);

/// Feasible candidates ordered by (delay asc, bottleneck desc, hops asc).
std::vector<PathRecord> rank_paths(const CandidateSet& set);

std::optional<PathRecord> select_best(const CandidateSet& set);

}  // namespace qosip
