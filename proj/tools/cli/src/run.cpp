#include "tdsim/cli/run.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <utility>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tdsim/analysis/export.hpp"
#include "tdsim/analysis/imbalance.hpp"
#include "tdsim/analysis/sag.hpp"
#include "tdsim/cli/embedded.hpp"
#include "tdsim/dynamics/simulate.hpp"
#include "tdsim/error.hpp"
#include "tdsim/netmodel/census.hpp"
#include "tdsim/netmodel/hybrid.hpp"
#include "tdsim/netmodel/model_io.hpp"
#include "tdsim/netmodel/validate.hpp"
#include "tdsim/powerflow/coupled.hpp"

namespace tdsim::cli {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::string model;
    std::string mode = "unified";
    std::string build_mode = "coupled";
    double tolerance = 1e-6;
    int jobs = 0;
    std::string scenario;
    std::string out = ".";
    std::string scope;
};

// Raised for failures that are not library errors (validation findings).
struct DomainFailure {
    std::string code;
    std::string message;
    std::string subject;
};

std::string_view require_embedded(std::string_view name) {
    const std::string_view text = embedded_file(name);
    if (text.empty()) throw Error(ErrorCode::Io, "missing embedded data '" + std::string(name) + "'");
    return text;
}

powerflow::PowerFlowOptions pf_options(const RunConfig& cfg) {
    powerflow::PowerFlowOptions o;
    o.mode = cfg.mode == "coupled" ? powerflow::CouplingMode::Coupled : powerflow::CouplingMode::Unified;
    o.tolerance = cfg.tolerance;
    o.boundary_tolerance = cfg.tolerance;
    o.jobs = cfg.jobs;
    return o;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string sci(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

// Loads and validates a model; findings are a domain failure.
netmodel::Network load_checked(const std::string& path, std::ostream& out) {
    netmodel::Network net = netmodel::load_network(path);
    const auto diags = netmodel::validate(net);
    for (const auto& d : diags) out << d.rule << ' ' << d.element << ": " << d.message << '\n';
    if (!diags.empty()) {
        throw DomainFailure{"InvalidModel", std::to_string(diags.size()) + " diagnostics in " + path,
                            diags.front().element};
    }
    return net;
}

powerflow::PowerFlowSolution solve_reported(const netmodel::Network& net, const RunConfig& cfg, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    powerflow::PowerFlowSolution sol = powerflow::solve(net, pf_options(cfg));
    out << "power flow (" << cfg.mode << "): " << sol.rounds.size() << " rounds, " << sol.inner_iterations
        << " inner iterations, max mismatch " << sci(sol.max_mismatch) << " pu, " << fixed(seconds_since(t0), 3)
        << " s\n";
    return sol;
}

dynamics::DynamicScenario scenario_for(const RunConfig& cfg) {
    if (cfg.scenario.empty()) return default_scenario();
    return dynamics::parse_scenario(netmodel::read_text_file(cfg.scenario));
}

dynamics::TimeSeries simulate_reported(const RunConfig& cfg, std::ostream& out) {
    const netmodel::Network net = load_checked(cfg.model, out);
    const dynamics::DynamicScenario scenario = scenario_for(cfg);
    const powerflow::PowerFlowSolution pf = solve_reported(net, cfg, out);
    const auto t0 = std::chrono::steady_clock::now();
    dynamics::TimeSeries ts = dynamics::simulate(net, pf, scenario);
    out << "simulation: " << ts.time.size() << " samples at dt " << analysis::format_number(ts.dt) << " s, "
        << ts.events.size() << " events, " << fixed(seconds_since(t0), 3) << " s\n";
    for (const auto& note : ts.notes) out << "note: " << note << '\n';
    return ts;
}

// Every file of a command is rendered first and written only at the end.
using Outputs = std::vector<std::pair<std::string, std::string>>;

void write_outputs(const RunConfig& cfg, const Outputs& files, std::ostream& out) {
    const fs::path dir(cfg.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorCode::Io, "cannot create output directory '" + cfg.out + "'", cfg.out);
    }
    for (const auto& [name, text] : files) {
        analysis::write_file_atomic(dir / name, text);
        out << "wrote " << (dir / name).string() << '\n';
    }
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
    const netmodel::Network net = netmodel::load_network(cfg.model);
    const auto diags = netmodel::validate(net);
    for (const auto& d : diags) out << d.rule << ' ' << d.element << ": " << d.message << '\n';
    out << diags.size() << " diagnostics\n";
    if (!diags.empty()) {
        throw DomainFailure{"InvalidModel", std::to_string(diags.size()) + " diagnostics", diags.front().element};
    }
    return 0;
}

int cmd_build_hybrid(const RunConfig& cfg, std::ostream& out) {
    const netmodel::Network tx = cfg.model.empty()
                                     ? netmodel::parse_network(require_embedded("ieee39"))
                                     : netmodel::load_network(cfg.model);
    const netmodel::Network hybrid = default_hybrid(tx, cfg.build_mode == "unified");
    const netmodel::Census census = netmodel::component_census(hybrid);
    for (const auto& key : netmodel::census_table_keys()) out << key << ' ' << census.at(key) << '\n';
    for (const auto& [key, n] : census) {
        bool table = false;
        for (const auto& k : netmodel::census_table_keys()) table = table || k == key;
        if (!table) out << key << ' ' << n << '\n';
    }
    write_outputs(cfg, {{"hybrid.json", netmodel::serialize_network(hybrid)}}, out);
    return 0;
}

int cmd_pf(const RunConfig& cfg, std::ostream& out) {
    const netmodel::Network net = load_checked(cfg.model, out);
    const powerflow::PowerFlowSolution sol = solve_reported(net, cfg, out);
    write_outputs(cfg, {{"solution.csv", analysis::solution_csv(sol)}, {"trace.csv", analysis::trace_csv(sol)}},
                  out);
    return 0;
}

int cmd_dyn(const RunConfig& cfg, std::ostream& out) {
    const dynamics::TimeSeries ts = simulate_reported(cfg, out);
    write_outputs(cfg,
                  {{"timeseries.csv", analysis::timeseries_csv(ts)},
                   {"timeseries.json", analysis::timeseries_metadata_json(ts)}},
                  out);
    return 0;
}

int cmd_imbalance(const RunConfig& cfg, std::ostream& out) {
    const netmodel::Network net = load_checked(cfg.model, out);
    const powerflow::PowerFlowSolution sol = solve_reported(net, cfg, out);
    const analysis::ImbalanceReport report = analysis::imbalance_report(sol, analysis::Scope::parse(cfg.scope));
    out << "imbalance: " << report.summary.count << " buses, min " << fixed(report.summary.min, 4) << " %, max "
        << fixed(report.summary.max, 4) << " %, above 1 %: " << fixed(100.0 * report.summary.fraction_above_1pct, 2)
        << " % of buses\n";
    write_outputs(cfg,
                  {{"imbalance.csv", analysis::imbalance_csv(report)},
                   {"imbalance_summary.csv", analysis::imbalance_summary_csv(report)}},
                  out);
    return 0;
}

int cmd_sag(const RunConfig& cfg, std::ostream& out) {
    const dynamics::TimeSeries ts = simulate_reported(cfg, out);
    std::vector<analysis::SagEvent> events;
    for (const auto& p : ts.probes) {
        if (p.quantity != dynamics::ProbeQuantity::VoltageMagnitude) continue;
        for (auto& e : analysis::sag_trace(ts, p.id)) events.push_back(std::move(e));
    }
    for (const auto& e : events) {
        out << "sag " << e.probe << ": start " << fixed(e.start, 4) << " s, duration " << fixed(e.duration, 4)
            << " s, residual " << fixed(e.residual, 4) << " pu, " << analysis::to_string(e.classification) << '\n';
    }
    if (events.empty()) out << "no sags below " << analysis::format_number(analysis::kSagThresholdPu) << " pu\n";
    write_outputs(cfg,
                  {{"sag_voltages.csv", analysis::voltage_table_csv(ts)},
                   {"iti_envelope.csv", analysis::iti_envelope_csv()},
                   {"sag_events.csv", analysis::sag_events_csv(events)}},
                  out);
    return 0;
}

void error_record(std::ostream& err, const std::string& code, const std::string& message, const std::string& subject) {
    nlohmann::ordered_json j;
    j["error"] = code;
    j["message"] = message;
    if (!subject.empty()) j["subject"] = subject;
    err << j.dump() << '\n';
}

}  // namespace

netmodel::Network default_hybrid(const netmodel::Network& transmission, bool unified) {
    const netmodel::Network feeder = netmodel::parse_network(require_embedded("ieee123"));
    const auto standard = netmodel::parse_substation_template(require_embedded("substation_standard"));
    netmodel::HybridOptions options;
    options.detailed = netmodel::parse_substation_template(require_embedded("substation_detailed"));
    options.detailed_bus = "12";
    options.unified = unified;
    return netmodel::build_hybrid(transmission, feeder, standard, netmodel::default_hybrid_mapping(), options);
}

netmodel::Network default_hybrid(bool unified) {
    return default_hybrid(netmodel::parse_network(require_embedded("ieee39")), unified);
}

dynamics::DynamicScenario default_scenario() { return dynamics::parse_scenario(require_embedded("scenario_slg")); }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Three-phase hybrid transmission and distribution simulator", "tdsim"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_model = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("model", cfg.model, "Network model file (JSON)")->check(CLI::ExistingFile);
        if (required) opt->required();
    };
    auto add_mode = [&](CLI::App* sub) {
        sub->add_option("--mode", cfg.mode, "Coupling approach: unified or coupled")
            ->check(CLI::IsMember({"unified", "coupled"}))
            ->capture_default_str();
    };
    auto add_solver = [&](CLI::App* sub) {
        add_mode(sub);
        sub->add_option("--tol", cfg.tolerance, "Power-flow and boundary tolerance, pu")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--jobs", cfg.jobs, "Worker threads for feeder solves (0: all cores)")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
    };
    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.out, "Output directory")->capture_default_str();
    };
    auto add_scenario = [&](CLI::App* sub) {
        sub->add_option("--scenario", cfg.scenario, "Dynamic scenario file (default: SLG fault at bus 12)")
            ->check(CLI::ExistingFile);
    };

    auto* validate = app.add_subcommand("validate", "Check a model file and list diagnostics");
    add_model(validate, true);

    auto* build = app.add_subcommand("build-hybrid", "Build the default hybrid model and print its census");
    build->add_option("--mode", cfg.build_mode, "coupled: boundary-paired feeders; unified: feeders joined")
        ->check(CLI::IsMember({"unified", "coupled"}))
        ->capture_default_str();
    add_out(build);
    build->add_option("model", cfg.model, "Transmission model (default: embedded IEEE 39-bus)")
        ->check(CLI::ExistingFile);

    auto* pf = app.add_subcommand("pf", "Solve the power flow");
    add_solver(pf);
    add_out(pf);
    add_model(pf, true);

    auto* dyn = app.add_subcommand("dyn", "Run a dynamic scenario from the power-flow point");
    add_solver(dyn);
    add_scenario(dyn);
    add_out(dyn);
    add_model(dyn, true);

    auto* report = app.add_subcommand("report", "Imbalance and sag reports");
    report->require_subcommand(1);
    auto* imbalance = report->add_subcommand("imbalance", "Per-bus voltage imbalance of the power flow");
    add_solver(imbalance);
    imbalance->add_option("--scope", cfg.scope, "Comma-separated bus-id prefixes (default: all buses)");
    add_out(imbalance);
    add_model(imbalance, true);
    auto* sag = report->add_subcommand("sag", "Voltage sags of a dynamic run against the ITI envelope");
    add_solver(sag);
    add_scenario(sag);
    add_out(sag);
    add_model(sag, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "tdsim: " << e.what() << '\n';
        const CLI::App* failed = &app;
        for (CLI::App* sub : {validate, build, pf, dyn, imbalance, sag}) {
            if (sub->parsed()) failed = sub;
        }
        err << failed->help();
        return 2;
    }

    try {
        if (validate->parsed()) return cmd_validate(cfg, out);
        if (build->parsed()) return cmd_build_hybrid(cfg, out);
        if (pf->parsed()) return cmd_pf(cfg, out);
        if (dyn->parsed()) return cmd_dyn(cfg, out);
        if (imbalance->parsed()) return cmd_imbalance(cfg, out);
        if (sag->parsed()) return cmd_sag(cfg, out);
    } catch (const Error& e) {
        error_record(err, to_string(e.code()), e.what(), e.subject());
        return 1;
    } catch (const DomainFailure& f) {
        error_record(err, f.code, f.message, f.subject);
        return 1;
    } catch (const std::exception& e) {
        error_record(err, "Internal", e.what(), {});
        return 1;
    }
    return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"tdsim"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace tdsim::cli
