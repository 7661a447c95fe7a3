// End-to-end checks of the command-line tool: generate a feeder, run every
// subcommand against it, and re-read the artifacts.

#include "vvc/network.hpp"
#include "vvc/scenario_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    std::printf("%s %s\n", ok ? "[ ok ]" : "[FAIL]", what.c_str());
    if (!ok) ++failures;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args) {
    const std::string cmd = std::string(VVC_CLI_PATH) + " " + args + " 2>/dev/null >/dev/null";
    const int status = std::system(cmd.c_str());
    return (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
    const fs::path dir = fs::temp_directory_path() / "vvc_cli_smoke";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string net = (dir / "net.json").string();
    const std::string scen = (dir / "scen.json").string();

    check(run("generate --buses 14 --seed 7 --with-devices --net-out " + net + " --scenario-out " +
              scen + " --scenario-kind daily --steps 30") == 0,
          "generate");
    check(fs::exists(net) && fs::exists(scen), "generate artifacts exist");

    // Same seed regenerates byte-identical documents.
    const std::string net2 = (dir / "net2.json").string();
    check(run("generate --buses 14 --seed 7 --with-devices --net-out " + net2) == 0, "regenerate");
    check(slurp(net) == slurp(net2), "generation is deterministic");

    try {
        vvc::NetworkModel::parse(slurp(net));
        check(true, "generated network parses");
    } catch (const std::exception& e) {
        check(false, std::string("generated network parses: ") + e.what());
    }

    const std::string out = (dir / "out").string();
    check(run("powerflow --network " + net + " --out " + out) == 0, "powerflow");
    check(fs::exists(fs::path(out) / "voltages.csv"), "powerflow voltage table");

    check(run("solve --network " + net + " --controller pnm --out " + out) == 0, "solve");
    check(fs::exists(fs::path(out) / "solve_trace.csv"), "solve trace");

    check(run("bench --network " + net + " --out " + out) == 0, "bench");
    {
        // Rows: header then pnm, dsgp, gp with the iteration count second.
        std::istringstream in(slurp(fs::path(out) / "bench.csv"));
        std::string line;
        std::getline(in, line);
        long prev = -1;
        int rows = 0;
        bool increasing = true;
        while (std::getline(in, line)) {
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            const long iters = std::stol(line.substr(c1 + 1, c2 - c1 - 1));
            if (iters <= prev) increasing = false;
            prev = iters;
            ++rows;
        }
        check(rows == 3 && increasing, "bench iterations strictly increase from pnm to gp");
    }

    check(run("simulate --network " + net + " --scenario " + scen + " --seed 3 --out " + out) == 0,
          "simulate");
    check(fs::exists(fs::path(out) / "trace.csv") && fs::exists(fs::path(out) / "summary.json"),
          "simulate artifacts");

    const std::string out_b = (dir / "out_b").string();
    check(run("simulate --network " + net + " --scenario " + scen + " --seed 3 --out " + out_b) == 0,
          "simulate again");
    check(slurp(fs::path(out) / "trace.csv") == slurp(fs::path(out_b) / "trace.csv"),
          "simulate traces are byte-identical for one seed");

    check(run("mpc --network " + net + " --scenario " + scen + " --horizon 2 --out " + out) == 0, "mpc");
    check(fs::exists(fs::path(out) / "schedule.json"), "mpc schedule");

    // Error categories: missing file is a config error (exit 2); a malformed
    // document is a data error (exit 3).
    check(run("solve --network " + (dir / "missing.json").string()) == 2, "missing file exits 2");
    const std::string broken = (dir / "broken.json").string();
    std::ofstream(broken) << "{ not json";
    check(run("solve --network " + broken) == 3, "malformed document exits 3");

    std::printf("%s\n", failures == 0 ? "cli smoke: all checks passed" : "cli smoke: FAILURES");
    return failures == 0 ? 0 : 1;
}
