// Command-line driver: `run`, `compare` and `gen`.
#pragma once

#include "qosip/simulator.hpp"
#include "qosip/topology.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace qosip::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInvariant = 3;

struct RunConfig {
    std::string topology_path;
    std::string scenario_path;
    std::uint64_t seed{1};
    std::string out_dir{"out"};
    std::int64_t class_width_kbps{100};
    bool suppress_duplicates{true};
    std::int64_t probe_timeout_ms{1000};
    std::int64_t collect_window_ms{100};
    std::int64_t max_time_s{600};
    BaselineMode baseline{BaselineMode::None};
    bool write_trace{false};
};

struct GenConfig {
    GenParams params;
    std::string out_path;  // empty = stdout
};

SimConfig to_sim_config(const RunConfig& config);
std::string render_run_config(const RunConfig& config);
std::string compare_csv(const RunResult& qosip, const RunResult& baseline);

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_gen(const GenConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand; returns the exit code.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qosip::cli
