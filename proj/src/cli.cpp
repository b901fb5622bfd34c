#include "qosip/cli.hpp"

#include "qosip/metrics.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace qosip::cli {

namespace {

const char* baseline_name(BaselineMode mode)
{
    return mode == BaselineMode::SourceRouting ? "source-routing" : "none";
}

bool check_numbers(const RunConfig& c, std::ostream& err)
{
    const std::pair<const char*, std::int64_t> fields[] = {
        {"--class-width", c.class_width_kbps},
        {"--probe-timeout-ms", c.probe_timeout_ms},
        {"--collect-window-ms", c.collect_window_ms},
        {"--max-time-s", c.max_time_s},
    };
    for (const auto& [name, value] : fields) {
        if (value <= 0) {
            err << "error: " << name << " must be positive, got " << value << "\n";
            return false;
        }
    }
    return true;
}

struct Loaded {
    Topology topology;
    Scenario scenario;
};

/// Loads and validates inputs; returns false after printing a diagnostic.
bool load_inputs(const RunConfig& c, Loaded& loaded, std::ostream& err)
{
    if (!check_numbers(c, err)) {
        return false;
    }
    for (const auto* path : {&c.topology_path, &c.scenario_path}) {
        if (path->empty()) {
            err << "error: both --topology and --scenario are required\n";
            return false;
        }
        if (!std::filesystem::is_regular_file(*path)) {
            err << "error: cannot read " << *path << "\n";
            return false;
        }
    }
    try {
        loaded.topology = load_topology(c.topology_path);
        loaded.scenario = load_scenario(c.scenario_path, loaded.topology);
        loaded.scenario.validate(loaded.topology);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return false;
    }
    return true;
}

/// Runs one simulation. Returns an exit code; `result` is valid on kExitOk.
int simulate(const Loaded& in, const SimConfig& sim, RunResult& result, std::ostream& err)
{
    try {
        result = run_simulation(in.topology, in.scenario, sim);
    } catch (const InvariantViolation& e) {
        err << "invariant violated: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const PathMismatch& e) {
        err << "invariant violated: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const UnknownNeighbor& e) {
        err << "invariant violated: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (result.drained && result.reserved_total() != 0) {
        err << "invariant violated: " << result.reserved_total()
            << " kbps still reserved after the event queue drained\n";
        return kExitInvariant;
    }
    return kExitOk;
}

std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

void summarize(const char* label, const RunResult& r, std::ostream& out)
{
    const auto& c = r.counters;
    out << label << ": " << c.attempted() << " connections, "
        << c.with_outcome(Outcome::Accepted) << " accepted, " << c.with_outcome(Outcome::Blocked)
        << " blocked, " << c.with_outcome(Outcome::Failed) << " failed; " << r.trace.records.size()
        << " trace records; trace hash " << hex64(r.trace.hash()) << "\n";
}

int write_outputs(const std::filesystem::path& dir, const RunResult& r, bool with_trace,
                  std::ostream& err)
{
    try {
        export_csv(r.counters, r.throughput, dir);
        if (with_trace) {
            write_file(dir / "trace.csv", trace_csv(r.trace));
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

}  // namespace

SimConfig to_sim_config(const RunConfig& c)
{
    SimConfig sim;
    sim.protocol.policy.class_width_kbps = c.class_width_kbps;
    sim.protocol.suppress_duplicates = c.suppress_duplicates;
    sim.protocol.probe_timeout_us = c.probe_timeout_ms * 1000;
    sim.protocol.collect_window_us = c.collect_window_ms * 1000;
    sim.max_time_us = c.max_time_s * 1'000'000;
    sim.baseline = c.baseline;
    return sim;
}

std::string render_run_config(const RunConfig& c)
{
    std::ostringstream os;
    os << "topology=" << c.topology_path << "\n"
       << "scenario=" << c.scenario_path << "\n"
       << "seed=" << c.seed << "\n"
       << "class_width_kbps=" << c.class_width_kbps << "\n"
       << "suppress_duplicates=" << (c.suppress_duplicates ? "on" : "off") << "\n"
       << "probe_timeout_ms=" << c.probe_timeout_ms << "\n"
       << "collect_window_ms=" << c.collect_window_ms << "\n"
       << "max_time_s=" << c.max_time_s << "\n"
       << "baseline=" << baseline_name(c.baseline) << "\n";
    return os.str();
}

std::string compare_csv(const RunResult& q, const RunResult& b)
{
    std::ostringstream os;
    os << "metric,qosip,source_routing\n";
    auto row = [&os](const char* name, std::int64_t x, std::int64_t y) {
        os << name << ',' << x << ',' << y << '\n';
    };
    const auto& qc = q.counters;
    const auto& bc = b.counters;
    row("hello_messages", qc.sent(MessageKind::Hello), bc.sent(MessageKind::Hello));
    row("update_messages_boot", qc.boot_updates, bc.boot_updates);
    row("update_messages_triggered", qc.triggered_updates, bc.triggered_updates);
    row("link_state_messages_boot", qc.boot_link_states, bc.boot_link_states);
    row("link_state_messages_triggered", qc.triggered_link_states, bc.triggered_link_states);
    row("table_maintenance_messages", qc.triggered_updates + qc.triggered_link_states,
        bc.triggered_updates + bc.triggered_link_states);
    row("probe_messages", qc.sent(MessageKind::Probe), bc.sent(MessageKind::Probe));
    row("ack_messages", qc.sent(MessageKind::Ack), bc.sent(MessageKind::Ack));
    row("nack_messages", qc.sent(MessageKind::Nack), bc.sent(MessageKind::Nack));
    row("failure_messages", qc.sent(MessageKind::Failure), bc.sent(MessageKind::Failure));
    row("teardown_messages", qc.sent(MessageKind::Teardown), bc.sent(MessageKind::Teardown));
    row("data_messages", qc.sent(MessageKind::Data), bc.sent(MessageKind::Data));

    auto control_bytes = [](const Counters& c) {
        std::int64_t n = 0;
        for (const auto& [k, mc] : c.messages) {
            n += k == MessageKind::Data ? 0 : mc.bytes;
        }
        return n;
    };
    row("control_bytes", control_bytes(qc), control_bytes(bc));
    row("computations", qc.total_computations(), bc.total_computations());
    row("accepted", qc.with_outcome(Outcome::Accepted), bc.with_outcome(Outcome::Accepted));
    row("blocked", qc.with_outcome(Outcome::Blocked), bc.with_outcome(Outcome::Blocked));
    row("failed", qc.with_outcome(Outcome::Failed), bc.with_outcome(Outcome::Failed));
    auto rate = [](const Counters& c) {
        return format_ratio(c.with_outcome(Outcome::Blocked) + c.with_outcome(Outcome::Failed),
                            c.attempted());
    };
    os << "blocking_rate," << rate(qc) << ',' << rate(bc) << '\n';
    return os.str();
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    Loaded in;
    if (!load_inputs(config, in, err)) {
        return kExitConfig;
    }
    RunResult result;
    if (int rc = simulate(in, to_sim_config(config), result, err); rc != kExitOk) {
        return rc;
    }
    const std::filesystem::path dir(config.out_dir);
    if (int rc = write_outputs(dir, result, config.write_trace, err); rc != kExitOk) {
        return rc;
    }
    try {
        write_file(dir / "run_config.txt", render_run_config(config));
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    summarize(baseline_name(config.baseline) == std::string("none") ? "qosip" : "source-routing",
              result, out);
    return kExitOk;
}

int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    if (config.baseline == BaselineMode::None) {
        err << "error: compare needs --baseline source-routing\n";
        return kExitConfig;
    }
    Loaded in;
    if (!load_inputs(config, in, err)) {
        return kExitConfig;
    }
    RunConfig qosip_cfg = config;
    qosip_cfg.baseline = BaselineMode::None;
    RunResult q;
    RunResult b;
    if (int rc = simulate(in, to_sim_config(qosip_cfg), q, err); rc != kExitOk) {
        return rc;
    }
    if (int rc = simulate(in, to_sim_config(config), b, err); rc != kExitOk) {
        return rc;
    }
    const std::filesystem::path dir(config.out_dir);
    for (const auto& [sub, r] : {std::pair{"qosip", &q}, std::pair{"source_routing", &b}}) {
        if (int rc = write_outputs(dir / sub, *r, config.write_trace, err); rc != kExitOk) {
            return rc;
        }
    }
    try {
        write_file(dir / "compare.csv", compare_csv(q, b));
        write_file(dir / "run_config.txt", render_run_config(config));
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    summarize("qosip", q, out);
    summarize("source-routing", b, out);
    return kExitOk;
}

int cmd_gen(const GenConfig& config, std::ostream& out, std::ostream& err)
{
    std::string text;
    try {
        text = write_topology(generate_topology(config.params));
    } catch (const InvalidParams& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (config.out_path.empty()) {
        out << text;
        return kExitOk;
    }
    try {
        write_file(config.out_path, text);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"QoS-aware routing simulator: selective flooding over two-hop neighbor state"};
    app.require_subcommand(1);

    RunConfig rc;
    std::string suppress = "on";
    std::string baseline = "none";
    auto add_run_options = [&](CLI::App* sub) {
        sub->add_option("--topology", rc.topology_path, "Topology file")->required();
        sub->add_option("--scenario", rc.scenario_path, "Scenario file")->required();
        sub->add_option("--seed", rc.seed, "Seed (recorded for reproducibility)");
        sub->add_option("--out", rc.out_dir, "Output directory");
        sub->add_option("--class-width", rc.class_width_kbps, "Residual bandwidth class width (kbps)");
        sub->add_option("--suppress-duplicates", suppress, "Forward each connection's probe once")
            ->check(CLI::IsMember({"on", "off"}));
        sub->add_option("--probe-timeout-ms", rc.probe_timeout_ms, "Source gives up after this long");
        sub->add_option("--collect-window-ms", rc.collect_window_ms,
                        "Destination waits this long after the first probe");
        sub->add_option("--max-time-s", rc.max_time_s, "Simulated time limit (s)");
        sub->add_option("--baseline", baseline, "Route discovery comparator")
            ->check(CLI::IsMember({"none", "source-routing"}));
        sub->add_flag("--trace", rc.write_trace, "Also write trace.csv");
    };
    auto* run = app.add_subcommand("run", "Simulate a scenario and write CSV reports");
    add_run_options(run);
    auto* compare = app.add_subcommand("compare", "Run QoSIP and the baseline side by side");
    add_run_options(compare);

    GenConfig gc;
    auto* gen = app.add_subcommand("gen", "Generate a random connected topology");
    gen->add_option("--nodes", gc.params.nodes, "Router count")->required();
    gen->add_option("--degree", gc.params.degree, "Target average degree");
    gen->add_option("--cap-min", gc.params.capacity_min_kbps, "Minimum link capacity (kbps)");
    gen->add_option("--cap-max", gc.params.capacity_max_kbps, "Maximum link capacity (kbps)");
    gen->add_option("--delay-min", gc.params.delay_min_ms, "Minimum link delay (ms)");
    gen->add_option("--delay-max", gc.params.delay_max_ms, "Maximum link delay (ms)");
    gen->add_option("--seed", gc.params.seed, "Generator seed");
    gen->add_option("--out", gc.out_path, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    rc.suppress_duplicates = suppress == "on";
    rc.baseline = baseline == "source-routing" ? BaselineMode::SourceRouting : BaselineMode::None;
    if (run->parsed()) {
        return cmd_run(rc, out, err);
    }
    if (compare->parsed()) {
        return cmd_compare(rc, out, err);
    }
    return cmd_gen(gc, out, err);
}

}  // namespace qosip::cli
