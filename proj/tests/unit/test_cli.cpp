#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "support/fixtures.hpp"
#include "tdsim/cli/embedded.hpp"
#include "tdsim/cli/run.hpp"
#include "tdsim/netmodel/census.hpp"
#include "tdsim/netmodel/model_io.hpp"

namespace fs = std::filesystem;
using tdsim::test::data_path;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = tdsim::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// Fresh scratch directory removed at scope exit.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& tag)
        : dir(fs::temp_directory_path() / ("tdsim-cli-" + std::to_string(::getpid()) + "-" + tag)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

const char* kSmallScenario = R"({"dt": 0.005, "duration": 0.3,
  "events": [{"time": 0.1, "kind": "apply_shunt_fault", "target": "16", "phases": "A", "resistance_ohm": 5.0},
             {"time": 0.2, "kind": "clear_shunt_fault", "target": "16", "phases": "A"}],
  "probes": [{"id": "V16A", "bus": "16", "phase": "A", "quantity": "magnitude"},
             {"id": "G30d", "machine": "G30", "quantity": "delta"}]})";

}  // namespace

TEST_CASE("help exits cleanly") {
    const Result r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("build-hybrid") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run({}).code == 2);
    const Result bad_mode = run({"pf", "--mode", "nosuch", data_path("ieee39.json")});
    CHECK(bad_mode.code == 2);
    CHECK(bad_mode.err.find("--mode") != std::string::npos);
    CHECK(run({"pf", "/nonexistent/model.json"}).code == 2);
    CHECK(run({"pf", "--tol", "-1", data_path("ieee39.json")}).code == 2);
}

TEST_CASE("validate reports clean models") {
    const Result r = run({"validate", data_path("ieee39.json")});
    CHECK(r.code == 0);
    CHECK(r.out == "0 diagnostics\n");
}

TEST_CASE("domain failures print one JSON error record") {
    Scratch s("invalid");
    tdsim::netmodel::Network net = tdsim::test::ieee39();
    net.buses.push_back({"ISLAND", tdsim::netmodel::PhaseSet::abc(), 345.0, tdsim::netmodel::BusKind::Transmission});
    net.reindex();
    write(s.path("bad.json"), tdsim::netmodel::serialize_network(net));
    const Result r = run({"validate", s.path("bad.json")});
    CHECK(r.code == 1);
    CHECK(r.out.find("Unreachable ISLAND") != std::string::npos);
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j.at("error") == "InvalidModel");
    CHECK(j.contains("message"));

    write(s.path("broken.json"), "{\"buses\": [");
    const Result broken = run({"pf", "--out", s.dir.string(), s.path("broken.json")});
    CHECK(broken.code == 1);
    CHECK(nlohmann::json::parse(broken.err).at("error") == "SyntaxError");
    CHECK_FALSE(fs::exists(s.path("solution.csv")));
}

TEST_CASE("pf writes identical files on repeated runs") {
    Scratch a("pf-a"), b("pf-b");
    const Result ra = run({"pf", "--out", a.dir.string(), data_path("ieee39.json")});
    const Result rb = run({"pf", "--out", b.dir.string(), data_path("ieee39.json")});
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    for (const char* f : {"solution.csv", "trace.csv"}) {
        INFO(f);
        const std::string x = slurp(a.path(f));
        CHECK(!x.empty());
        CHECK(x == slurp(b.path(f)));
    }
    CHECK(slurp(a.path("solution.csv")).rfind("bus,phase,v_pu,angle_deg,kw,kvar\n", 0) == 0);
}

TEST_CASE("dyn and sag reports run a scenario file deterministically") {
    Scratch s("dyn");
    write(s.path("scenario.json"), kSmallScenario);
    const auto out1 = s.dir / "one", out2 = s.dir / "two";
    const Result r1 = run({"dyn", "--scenario", s.path("scenario.json"), "--out", out1.string(), data_path("ieee39.json")});
    const Result r2 = run({"dyn", "--scenario", s.path("scenario.json"), "--out", out2.string(), data_path("ieee39.json")});
    REQUIRE(r1.code == 0);
    REQUIRE(r2.code == 0);
    CHECK(slurp((out1 / "timeseries.csv").string()) == slurp((out2 / "timeseries.csv").string()));
    CHECK(slurp((out1 / "timeseries.json").string()) == slurp((out2 / "timeseries.json").string()));
    const auto meta = nlohmann::json::parse(slurp((out1 / "timeseries.json").string()));
    CHECK(meta.contains("scenario_hash"));

    const Result sag = run({"report", "sag", "--scenario", s.path("scenario.json"), "--out", out1.string(),
                            data_path("ieee39.json")});
    REQUIRE(sag.code == 0);
    CHECK(fs::exists(out1 / "sag_voltages.csv"));
    CHECK(fs::exists(out1 / "iti_envelope.csv"));
    CHECK(slurp((out1 / "sag_events.csv").string()).rfind("probe,bus,phase,start_s,duration_s,residual_pu", 0) == 0);
}

TEST_CASE("imbalance report honours the scope") {
    Scratch s("imb");
    const Result r = run({"report", "imbalance", "--scope", "1", "--out", s.dir.string(), data_path("ieee39.json")});
    REQUIRE(r.code == 0);
    const std::string csv = slurp(s.path("imbalance.csv"));
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    int rows = 0;
    while (std::getline(lines, line)) {
        CHECK(line.front() == '1');
        ++rows;
    }
    CHECK(rows == 11);
}

TEST_CASE("build-hybrid prints the census of the written model") {
    Scratch s("build");
    const Result r = run({"build-hybrid", "--out", s.dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("feeders 96\n") != std::string::npos);
    CHECK(r.out.find("switches 1154\n") != std::string::npos);
    const auto written = tdsim::netmodel::load_network(s.path("hybrid.json"));
    CHECK(tdsim::netmodel::component_census(written) ==
          tdsim::netmodel::component_census(tdsim::test::default_hybrid()));
}

TEST_CASE("embedded data matches the data directory") {
    CHECK(tdsim::cli::embedded_file("ieee39") == slurp(data_path("ieee39.json")));
    CHECK(tdsim::cli::embedded_file("scenario_slg") == slurp(data_path("scenario_slg.json")));
    CHECK(tdsim::cli::embedded_file("nope").empty());
    CHECK(tdsim::cli::default_scenario().probes.size() == 7);
}
