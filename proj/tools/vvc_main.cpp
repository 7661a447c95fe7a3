// Batch front end: power flows, offline solves, closed-loop simulations,
// device scheduling, and synthetic feeder generation.

#include "vvc/feeder_gen.hpp"
#include "vvc/linear_model.hpp"
#include "vvc/linflow.hpp"
#include "vvc/network.hpp"
#include "vvc/online.hpp"
#include "vvc/plant.hpp"
#include "vvc/pnm.hpp"
#include "vvc/scenario_io.hpp"
#include "vvc/upperlayer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace vvc;

namespace {

int log_level() {
    const char* env = std::getenv("VVC_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[vvc] " << msg << "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_config("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_config("cannot write file: " + path.string());
    out << content;
}

struct CommonArgs {
    std::string network;
    std::string scenario;
    std::string controller = "pnm";
    std::string out = "out";
    uint64_t seed = 1;
    Scalar epsilon = 1e-3;
    Scalar beta = 0.5;
    Scalar delta = 0.1;
    Scalar control_period = 0.0;  // 0: keep the scenario's value
    Scalar noise_std = -1.0;      // <0: keep the scenario's value
    int max_iters = 200000;
    Scalar tol = 1e-8;
    // Uniform operating point used when no scenario is given.
    Scalar load_p = 0.06;
    Scalar load_qc = 0.03;
    Scalar pv = 0.2;

    ControllerConfig cfg() const {
        ControllerConfig c;
        c.epsilon = epsilon;
        c.beta = beta;
        c.delta = delta;
        c.max_iterations = max_iters;
        c.convergence_tol = tol;
        c.validate();
        return c;
    }

    ControllerKind kind() const {
        if (controller == "pnm") return ControllerKind::pnm;
        if (controller == "gp") return ControllerKind::gp;
        if (controller == "dsgp") return ControllerKind::dsgp;
        throw_config("unknown controller '" + controller + "' (expected pnm, gp, or dsgp)");
    }
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_scenario = true) {
    cmd->add_option("--network", args.network, "network document path");
    if (with_scenario) cmd->add_option("--scenario", args.scenario, "scenario document path");
    cmd->add_option("--controller", args.controller, "pnm | gp | dsgp");
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--seed", args.seed, "random seed");
    cmd->add_option("--epsilon", args.epsilon, "near-bound band cap");
    cmd->add_option("--beta", args.beta, "step-shrink factor");
    cmd->add_option("--delta", args.delta, "sufficient-decrease constant");
    cmd->add_option("--control-period", args.control_period, "override control period (s)");
    cmd->add_option("--noise-std", args.noise_std, "override measurement noise (pu^2)");
    cmd->add_option("--max-iters", args.max_iters, "solver iteration cap");
    cmd->add_option("--tol", args.tol, "solver convergence tolerance");
    cmd->add_option("--load-p", args.load_p, "uniform per-node real load (no scenario)");
    cmd->add_option("--load-qc", args.load_qc, "uniform per-node reactive load (no scenario)");
    cmd->add_option("--pv", args.pv, "uniform per-DER-node real output (no scenario)");
}

NetworkModel load_network(const CommonArgs& args) {
    if (args.network.empty()) throw_config("--network is required");
    return NetworkModel::parse(read_file(args.network));
}

ScenarioSeries load_or_make_scenario(const CommonArgs& args, const NetworkModel& net, int static_steps) {
    ScenarioSeries s;
    if (!args.scenario.empty()) {
        const std::string text = read_file(args.scenario);
        const std::string dir = fs::path(args.scenario).parent_path().string();
        s = load_scenario(text, net, dir);
    } else {
        s = make_static_scenario(net, static_steps, args.load_p, args.load_qc, args.pv);
    }
    if (args.control_period > 0) s.control_period_s = args.control_period;
    if (args.noise_std >= 0) s.noise_std = args.noise_std;
    return s;
}

OperatingPoint point_at(const ScenarioSeries& s, int idx) {
    OperatingPoint pt;
    pt.v0 = s.v0.row(idx).transpose();
    pt.p = (s.p.row(idx) - s.pv.row(idx)).transpose();
    pt.qc = s.qc.row(idx).transpose();
    return pt;
}

int cmd_powerflow(const CommonArgs& args) {
    const NetworkModel net = load_network(args);
    const ScenarioSeries scen = load_or_make_scenario(args, net, 1);
    const OperatingPoint pt = point_at(scen, 0);
    const PlantSolution sol = solve_nonlinear(net, pt, Vector::Zero(net.node_count()));
    if (!sol.converged) {
        std::cerr << "error (convergence): power flow did not converge\n";
        return 4;
    }
    write_file(fs::path(args.out) / "voltages.csv",
               voltage_table_to_csv(net, sol.squared_magnitudes, &sol.node_voltages));
    info("power flow converged in " + std::to_string(sol.iterations) + " iterations, residual " +
         format_scalar(sol.residual));
    info("wrote " + (fs::path(args.out) / "voltages.csv").string());
    return 0;
}

int cmd_solve(const CommonArgs& args) {
    const NetworkModel net = load_network(args);
    const LinearSensitivityModel model = build_linear_model(net);
    const ScenarioSeries scen = load_or_make_scenario(args, net, 1);
    const OperatingPoint pt = point_at(scen, 0);
    const Vector c = compute_c(model, pt.v0, pt.p, pt.qc);
    const Vector v_ref = Vector::Ones(model.m());
    const VarLimits limits = estimate_var_limits(scen.capacity, scen.pv.row(0).transpose());
    const ControllerConfig cfg = args.cfg();
    const Vector q0 = Vector::Zero(model.m());

    SolveResult res;
    switch (args.kind()) {
        case ControllerKind::pnm: res = pnm_solve(model, c, v_ref, limits, cfg, q0); break;
        case ControllerKind::gp: res = gp_solve(model, c, v_ref, limits, cfg, q0); break;
        case ControllerKind::dsgp: res = dsgp_solve(model, c, v_ref, limits, cfg, q0); break;
    }
    write_file(fs::path(args.out) / "solve_trace.csv", solve_trace_to_csv(res.trace));
    const KktReport kkt = check_kkt(res.qg, res.gradient, limits, 1e-6);

    nlohmann::json summary;
    summary["controller"] = args.controller;
    summary["iterations"] = res.iterations;
    summary["converged"] = res.converged();
    summary["objective"] = res.objective;
    summary["kkt_residual"] = kkt.residual;
    std::vector<Scalar> qg(res.qg.begin(), res.qg.end());
    summary["qg"] = qg;
    write_file(fs::path(args.out) / "solve_summary.json", summary.dump(2) + "\n");

    std::cout << args.controller << ": iterations=" << res.iterations
              << " objective=" << format_scalar(res.objective)
              << " kkt_residual=" << format_scalar(kkt.residual) << "\n";
    if (!res.converged()) {
        std::cerr << "error (convergence): solver hit the iteration cap\n";
        return 4;
    }
    return 0;
}

int cmd_simulate(const CommonArgs& args, bool with_baseline) {
    const NetworkModel net = load_network(args);
    const LinearSensitivityModel model = build_linear_model(net);
    const ScenarioSeries scen = load_or_make_scenario(args, net, 60);

    SimulationOptions opt;
    opt.controller = args.kind();
    opt.cfg = args.cfg();
    opt.seed = args.seed;
    opt.with_baseline = with_baseline;
    const SimulationResult result = run_simulation(net, model, scen, opt);

    write_file(fs::path(args.out) / "trace.csv", trace_to_csv(net, result.controlled));
    write_file(fs::path(args.out) / "summary.json", summary_to_json(result.controlled));
    if (result.baseline) {
        write_file(fs::path(args.out) / "baseline_trace.csv", trace_to_csv(net, *result.baseline));
        write_file(fs::path(args.out) / "baseline_summary.json", summary_to_json(*result.baseline));
    }
    std::cout << "steps=" << result.controlled.rows.size()
              << " time_avg_objective=" << format_scalar(result.controlled.time_avg_objective)
              << " undervoltage_steps=" << result.controlled.undervoltage_steps
              << " overvoltage_steps=" << result.controlled.overvoltage_steps << "\n";
    if (result.controlled.plant_failures > 0) {
        std::cerr << "error (convergence): " << result.controlled.plant_failures
                  << " plant solves failed; see trace\n";
        return 4;
    }
    return 0;
}

int cmd_bench(const CommonArgs& args) {
    const NetworkModel net = load_network(args);
    const LinearSensitivityModel model = build_linear_model(net);
    const ScenarioSeries scen = load_or_make_scenario(args, net, 1);
    const OperatingPoint pt = point_at(scen, 0);
    const Vector c = compute_c(model, pt.v0, pt.p, pt.qc);
    const Vector v_ref = Vector::Ones(model.m());
    const VarLimits limits = estimate_var_limits(scen.capacity, scen.pv.row(0).transpose());
    const ControllerConfig cfg = args.cfg();
    const Vector q0 = Vector::Zero(model.m());

    std::ostringstream csv;
    csv << "controller,iterations,converged,objective,kkt_residual\n";
    auto emit = [&](const char* name, const SolveResult& res) {
        const KktReport kkt = check_kkt(res.qg, res.gradient, limits, 1e-6);
        csv << name << ',' << res.iterations << ',' << (res.converged() ? 1 : 0) << ','
            << format_scalar(res.objective) << ',' << format_scalar(kkt.residual) << "\n";
        std::cout << name << ": iterations=" << res.iterations
                  << " objective=" << format_scalar(res.objective) << "\n";
    };
    emit("pnm", pnm_solve(model, c, v_ref, limits, cfg, q0));
    emit("dsgp", dsgp_solve(model, c, v_ref, limits, cfg, q0));
    emit("gp", gp_solve(model, c, v_ref, limits, cfg, q0));
    write_file(fs::path(args.out) / "bench.csv", csv.str());
    info("wrote " + (fs::path(args.out) / "bench.csv").string());
    return 0;
}

int cmd_mpc(const CommonArgs& args, int horizon, Scalar weight_v, Scalar weight_tap, Scalar weight_cb) {
    const NetworkModel net = load_network(args);
    const LinearSensitivityModel model = build_linear_model(net);
    const ScenarioSeries scen = load_or_make_scenario(args, net, horizon);
    const DiscreteDeviceConfig devices = DiscreteDeviceConfig::from_network(net, weight_v, weight_tap, weight_cb);

    MpcProblem problem;
    problem.horizon = horizon;
    problem.period_s = scen.resolution_s;
    const Index m = model.m();
    problem.p.resize(horizon, m);
    problem.ql.resize(horizon, m);
    problem.qg_lower.resize(horizon, m);
    problem.qg_upper.resize(horizon, m);
    for (int t = 0; t < horizon; ++t) {
        const int idx = std::min(t, scen.steps() - 1);
        problem.p.row(t) = scen.p.row(idx) - scen.pv.row(idx);
        problem.ql.row(t) = scen.qc.row(idx);
        const VarLimits lim = estimate_var_limits(scen.capacity, scen.pv.row(idx).transpose());
        problem.qg_lower.row(t) = lim.lower.transpose();
        problem.qg_upper.row(t) = lim.upper.transpose();
    }
    problem.tap0 = IntVector::Zero(model.n0());
    problem.cb0 = IntVector::Zero(m);

    const DiscreteSchedule schedule = solve_mpc(model, problem, devices, args.cfg());
    const FirstStepCommand cmd = apply_receding_horizon(schedule);

    nlohmann::json out;
    out["objective"] = schedule.objective;
    out["horizon"] = horizon;
    for (int t = 0; t < horizon; ++t) {
        nlohmann::json step;
        step["n_tap"] = std::vector<int>(schedule.n_tap[t].begin(), schedule.n_tap[t].end());
        nlohmann::json banks = nlohmann::json::object();
        for (Index i = 0; i < m; ++i)
            if (devices.cb_max[i] > 0) banks[net.node_label(i)] = schedule.n_cb[t][i];
        step["n_cb"] = std::move(banks);
        out["steps"].push_back(std::move(step));
    }
    out["first_step"]["n_tap"] = std::vector<int>(cmd.n_tap.begin(), cmd.n_tap.end());
    write_file(fs::path(args.out) / "schedule.json", out.dump(2) + "\n");
    std::cout << "mpc objective=" << format_scalar(schedule.objective) << " first-step taps=[";
    for (Index i = 0; i < cmd.n_tap.size(); ++i) std::cout << (i ? " " : "") << cmd.n_tap[i];
    std::cout << "]\n";
    return 0;
}

int cmd_generate(const CommonArgs& args, FeederOptions opt, const std::string& out_path,
                 const std::string& scenario_out, const std::string& scenario_kind, int scenario_steps) {
    opt.seed = args.seed;
    const NetworkModel net = generate_feeder(opt);
    write_file(out_path, net.to_document());
    info("wrote " + out_path + " (m=" + std::to_string(net.node_count()) + " phase nodes)");
    if (!scenario_out.empty()) {
        ScenarioSeries scen;
        if (scenario_kind == "static") {
            scen = make_static_scenario(net, scenario_steps, args.load_p, args.load_qc, args.pv);
        } else if (scenario_kind == "daily") {
            scen = make_daily_scenario(net, scenario_steps, args.seed, args.load_p, args.load_qc,
                                       opt.der_capacity_pu);
        } else {
            throw_config("unknown scenario kind '" + scenario_kind + "' (expected static or daily)");
        }
        write_file(scenario_out, scenario_to_document(scen, out_path));
        info("wrote " + scenario_out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Volt/VAr control simulator for unbalanced radial feeders"};
    app.require_subcommand(1);

    CommonArgs args;
    FeederOptions gen_opt;
    std::string gen_out = "network.json";
    std::string gen_scenario_out;
    std::string gen_scenario_kind = "static";
    int gen_scenario_steps = 60;
    int mpc_horizon = 2;
    Scalar weight_v = 1.0, weight_tap = 0.1, weight_cb = 0.1;
    bool sim_baseline = false;

    auto* powerflow = app.add_subcommand("powerflow", "one nonlinear plant solve, voltage table CSV");
    add_common(powerflow, args);

    auto* solve = app.add_subcommand("solve", "offline solve on the linear model, convergence trace CSV");
    add_common(solve, args);

    auto* simulate = app.add_subcommand("simulate", "closed-loop simulation, trace CSV + summary");
    add_common(simulate, args);
    simulate->add_flag("--baseline", sim_baseline, "also run the uncontrolled trace");

    auto* bench = app.add_subcommand("bench", "pnm/dsgp/gp comparison on one instance");
    add_common(bench, args);

    auto* mpc = app.add_subcommand("mpc", "discrete device schedule by enumeration");
    add_common(mpc, args);
    mpc->add_option("--horizon", mpc_horizon, "prediction steps");
    mpc->add_option("--weight-v", weight_v, "voltage deviation weight");
    mpc->add_option("--weight-tap", weight_tap, "tap movement weight");
    mpc->add_option("--weight-cb", weight_cb, "bank switching weight");

    auto* generate = app.add_subcommand("generate", "synthesize a random radial unbalanced feeder");
    add_common(generate, args, false);
    generate->add_option("--buses", gen_opt.buses, "bus count (>= 2)");
    generate->add_option("--der-fraction", gen_opt.der_fraction, "fraction of buses with DERs");
    generate->add_option("--der-capacity", gen_opt.der_capacity_pu, "per-phase inverter rating (pu)");
    generate->add_option("--target-min-voltage", gen_opt.target_min_voltage, "baseline minimum magnitude");
    generate->add_option("--three-phase-fraction", gen_opt.three_phase_fraction, "backbone share of buses");
    generate->add_option("--two-phase-fraction", gen_opt.two_phase_fraction, "two-phase lateral share");
    generate->add_option("--xr-min", gen_opt.xr_min, "lower X/R ratio of drawn impedances");
    generate->add_option("--xr-max", gen_opt.xr_max, "upper X/R ratio of drawn impedances");
    generate->add_flag("--with-devices", gen_opt.with_devices, "attach an OLTC and capacitor banks");
    generate->add_option("--net-out", gen_out, "output network path");
    generate->add_option("--scenario-out", gen_scenario_out, "also write a scenario document");
    generate->add_option("--scenario-kind", gen_scenario_kind, "static | daily");
    generate->add_option("--steps", gen_scenario_steps, "scenario steps");

    CLI11_PARSE(app, argc, argv);

    try {
        if (powerflow->parsed()) return cmd_powerflow(args);
        if (solve->parsed()) return cmd_solve(args);
        if (simulate->parsed()) return cmd_simulate(args, sim_baseline);
        if (bench->parsed()) return cmd_bench(args);
        if (mpc->parsed()) return cmd_mpc(args, mpc_horizon, weight_v, weight_tap, weight_cb);
        if (generate->parsed())
            return cmd_generate(args, gen_opt, gen_out, gen_scenario_out, gen_scenario_kind,
                                gen_scenario_steps);
    } catch (const Error& e) {
        const char* kind = "internal";
        int code = 1;
        switch (e.kind()) {
            case ErrorKind::config: kind = "config"; code = 2; break;
            case ErrorKind::data: kind = "data"; code = 3; break;
            case ErrorKind::convergence: kind = "convergence"; code = 4; break;
            case ErrorKind::internal: kind = "internal"; code = 5; break;
        }
        std::cerr << "error (" << kind << "): " << e.what() << "\n";
        return code;
    } catch (const std::exception& e) {
        std::cerr << "error (internal): " << e.what() << "\n";
        return 5;
    }
    return 0;
}
