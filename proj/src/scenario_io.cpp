#include "vvc/scenario_io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace vvc {

using nlohmann::json;

std::string format_scalar(Scalar x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string join_path(const std::string& base, const std::string& rel) {
    if (rel.empty() || rel.front() == '/' || base.empty()) return rel;
    return base + "/" + rel;
}

// Column order the series matrices use, by label.
std::vector<std::string> node_labels(const NetworkModel& net) {
    std::vector<std::string> labels;
    for (Index k = 0; k < net.node_count(); ++k) labels.push_back(net.node_label(k));
    return labels;
}

Matrix csv_series(const std::string& text, const std::vector<std::string>& labels, const char* what) {
    const CsvTable table = parse_csv(text);
    std::vector<int> col(labels.size(), -1);
    for (size_t i = 0; i < labels.size(); ++i) {
        col[i] = table.column(labels[i]);
        if (col[i] < 0) throw_data(std::string(what) + ": csv is missing column '" + labels[i] + "'");
    }
    Matrix out(static_cast<Index>(table.rows.size()), static_cast<Index>(labels.size()));
    for (size_t r = 0; r < table.rows.size(); ++r)
        for (size_t i = 0; i < labels.size(); ++i)
            out(static_cast<Index>(r), static_cast<Index>(i)) = table.rows[r][static_cast<size_t>(col[i])];
    return out;
}

// One quantity of the scenario: scalar, per-node array, shared profile with
// per-node (or scalar) scale, inline data rows, or a csv reference.
Matrix load_series(const json& doc, const char* key, int& steps, const std::vector<std::string>& labels,
                   const Vector* der_mask, const std::string& base_dir) {
    const Index ncols = static_cast<Index>(labels.size());
    if (!doc.contains(key)) throw_data(std::string("scenario: missing series '") + key + "'");
    const json& spec = doc[key];

    auto per_node_scalar = [&](Scalar v) {
        Vector row = Vector::Constant(ncols, v);
        if (der_mask) row = row.cwiseProduct(*der_mask);
        return row;
    };

    Matrix out;
    if (spec.is_number()) {
        if (steps <= 0) throw_data("scenario: 'steps' is required with scalar series");
        out = per_node_scalar(spec.get<Scalar>()).transpose().replicate(steps, 1);
    } else if (spec.is_array()) {
        if (static_cast<Index>(spec.size()) != ncols)
            throw_data(std::string("scenario: '") + key + "' array must have " + std::to_string(ncols) + " entries");
        if (steps <= 0) throw_data("scenario: 'steps' is required with per-node series");
        Vector row(ncols);
        for (Index i = 0; i < ncols; ++i) row[i] = spec[static_cast<size_t>(i)].get<Scalar>();
        out = row.transpose().replicate(steps, 1);
    } else if (spec.is_object() && spec.contains("profile")) {
        const std::string name = spec["profile"].get<std::string>();
        if (!doc.contains("profiles") || !doc["profiles"].contains(name))
            throw_data("scenario: unknown profile '" + name + "'");
        const json& prof = doc["profiles"][name];
        if (steps <= 0) steps = static_cast<int>(prof.size());
        if (static_cast<int>(prof.size()) != steps)
            throw_data("scenario: profile '" + name + "' length differs from 'steps'");
        Vector scale;
        if (!spec.contains("scale") || spec["scale"].is_number()) {
            scale = per_node_scalar(spec.value("scale", 1.0));
        } else {
            if (static_cast<Index>(spec["scale"].size()) != ncols)
                throw_data(std::string("scenario: '") + key + "' scale array must have " +
                           std::to_string(ncols) + " entries");
            scale.resize(ncols);
            for (Index i = 0; i < ncols; ++i) scale[i] = spec["scale"][static_cast<size_t>(i)].get<Scalar>();
        }
        out.resize(steps, ncols);
        for (int t = 0; t < steps; ++t)
            out.row(t) = prof[static_cast<size_t>(t)].get<Scalar>() * scale.transpose();
    } else if (spec.is_object() && spec.contains("data")) {
        const json& data = spec["data"];
        if (steps <= 0) steps = static_cast<int>(data.size());
        if (static_cast<int>(data.size()) != steps)
            throw_data(std::string("scenario: '") + key + "' data length differs from 'steps'");
        out.resize(steps, ncols);
        for (int t = 0; t < steps; ++t) {
            const json& row = data[static_cast<size_t>(t)];
            if (static_cast<Index>(row.size()) != ncols)
                throw_data(std::string("scenario: '") + key + "' data rows must have " +
                           std::to_string(ncols) + " entries");
            for (Index i = 0; i < ncols; ++i) out(t, i) = row[static_cast<size_t>(i)].get<Scalar>();
        }
    } else if (spec.is_object() && spec.contains("csv")) {
        out = csv_series(read_file(join_path(base_dir, spec["csv"].get<std::string>())), labels, key);
        if (steps <= 0) steps = static_cast<int>(out.rows());
        if (static_cast<int>(out.rows()) != steps)
            throw_data(std::string("scenario: '") + key + "' csv row count differs from 'steps'");
    } else {
        throw_data(std::string("scenario: '") + key +
                   "' must be a number, array, or an object with profile/data/csv");
    }
    return out;
}

}  // namespace

std::optional<std::string> scenario_network_path(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw_data(std::string("malformed scenario document: ") + e.what());
    }
    if (doc.contains("network")) return doc["network"].get<std::string>();
    return std::nullopt;
}

ScenarioSeries load_scenario(const std::string& text, const NetworkModel& net, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw_data(std::string("malformed scenario document: ") + e.what());
    }

    ScenarioSeries s;
    s.resolution_s = doc.value("resolution_s", 10.0);
    s.control_period_s = doc.value("control_period_s", s.resolution_s);
    s.noise_std = doc.value("noise_std", 0.0);
    s.capacity = net.der_capacity();

    const Vector der_mask = (s.capacity.array() > 0).cast<Scalar>();
    int steps = doc.value("steps", -1);

    const auto labels = node_labels(net);
    s.p = load_series(doc, "p", steps, labels, nullptr, base_dir);
    s.qc = load_series(doc, "qc", steps, labels, nullptr, base_dir);
    s.pv = load_series(doc, "pv", steps, labels, &der_mask, base_dir);
    s.v0 = load_series(doc, "v0", steps, net.slack_labels(), nullptr, base_dir);

    s.validate(net.node_count(), net.root_phase_count());
    return s;
}

ScenarioSeries make_static_scenario(const NetworkModel& net, int steps, Scalar p, Scalar qc, Scalar pv_der,
                                    Scalar resolution_s, Scalar control_period_s) {
    const Index m = net.node_count();
    ScenarioSeries s;
    s.resolution_s = resolution_s;
    s.control_period_s = control_period_s;
    s.capacity = net.der_capacity();
    const Vector der_mask = (s.capacity.array() > 0).cast<Scalar>();
    s.p = Vector::Constant(m, p).transpose().replicate(steps, 1);
    s.qc = Vector::Constant(m, qc).transpose().replicate(steps, 1);
    s.pv = (pv_der * der_mask).transpose().replicate(steps, 1);
    s.v0 = Matrix::Ones(steps, net.root_phase_count());
    s.validate(m, net.root_phase_count());
    return s;
}

ScenarioSeries make_daily_scenario(const NetworkModel& net, int steps, uint64_t seed, Scalar p_peak,
                                   Scalar qc_peak, Scalar pv_peak, Scalar resolution_s,
                                   Scalar control_period_s) {
    const Index m = net.node_count();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Scalar> jitter(0.7, 1.3);

    ScenarioSeries s;
    s.resolution_s = resolution_s;
    s.control_period_s = control_period_s;
    s.capacity = net.der_capacity();

    Vector jp(m), jq(m), jg(m);
    for (Index i = 0; i < m; ++i) {
        jp[i] = jitter(rng);
        jq[i] = jitter(rng);
        jg[i] = jitter(rng);
    }
    const Vector der_mask = (s.capacity.array() > 0).cast<Scalar>();

    s.p.resize(steps, m);
    s.qc.resize(steps, m);
    s.pv.resize(steps, m);
    s.v0 = Matrix::Ones(steps, net.root_phase_count());
    for (int t = 0; t < steps; ++t) {
        const Scalar tau = static_cast<Scalar>(t) / static_cast<Scalar>(steps);
        const Scalar load = 0.45 + 0.25 * std::exp(-std::pow((tau - 0.33) / 0.10, 2)) +
                            0.55 * std::exp(-std::pow((tau - 0.80) / 0.08, 2));
        const Scalar sun = (tau > 0.25 && tau < 0.75)
                               ? std::pow(std::sin(std::numbers::pi * (tau - 0.25) / 0.5), 1.5)
                               : 0.0;
        for (Index i = 0; i < m; ++i) {
            s.p(t, i) = p_peak * load * jp[i];
            s.qc(t, i) = qc_peak * load * jq[i];
            s.pv(t, i) = std::min(pv_peak * sun * jg[i], s.capacity[i]) * der_mask[i];
        }
    }
    s.validate(m, net.root_phase_count());
    return s;
}

std::string scenario_to_document(const ScenarioSeries& scenario, const std::string& network_path) {
    json doc;
    if (!network_path.empty()) doc["network"] = network_path;
    doc["resolution_s"] = scenario.resolution_s;
    doc["control_period_s"] = scenario.control_period_s;
    doc["noise_std"] = scenario.noise_std;
    doc["steps"] = scenario.steps();
    auto dump = [](const Matrix& mat) {
        json rows = json::array();
        for (Index t = 0; t < mat.rows(); ++t) {
            json row = json::array();
            for (Index i = 0; i < mat.cols(); ++i) row.push_back(mat(t, i));
            rows.push_back(std::move(row));
        }
        return json{{"data", std::move(rows)}};
    };
    doc["p"] = dump(scenario.p);
    doc["qc"] = dump(scenario.qc);
    doc["pv"] = dump(scenario.pv);
    doc["v0"] = dump(scenario.v0);
    return doc.dump(1) + "\n";
}

std::string trace_to_csv(const NetworkModel& net, const SimulationTrace& trace) {
    std::ostringstream out;
    const auto labels = node_labels(net);
    out << "step,time_s,objective,backtracks,active_set_size,min_vmag,max_vmag,plant_converged,exhausted";
    for (const auto& l : labels) out << ",qg_" << l;
    for (const auto& l : labels) out << ",vm_" << l;
    for (const auto& l : labels) out << ",qlo_" << l;
    for (const auto& l : labels) out << ",qhi_" << l;
    out << "\n";
    for (size_t k = 0; k < trace.rows.size(); ++k) {
        const TraceRow& row = trace.rows[k];
        out << k << ',' << format_scalar(row.time_s) << ',' << format_scalar(row.objective) << ','
            << row.backtracks << ',' << row.active_size << ',' << format_scalar(row.min_vmag) << ','
            << format_scalar(row.max_vmag) << ',' << (row.plant_converged ? 1 : 0) << ','
            << (row.exhausted ? 1 : 0);
        for (Index i = 0; i < row.qg.size(); ++i) out << ',' << format_scalar(row.qg[i]);
        for (Index i = 0; i < row.v_measured.size(); ++i) out << ',' << format_scalar(row.v_measured[i]);
        for (Index i = 0; i < row.q_lower.size(); ++i) out << ',' << format_scalar(row.q_lower[i]);
        for (Index i = 0; i < row.q_upper.size(); ++i) out << ',' << format_scalar(row.q_upper[i]);
        out << "\n";
    }
    return out.str();
}

std::string summary_to_json(const SimulationTrace& trace) {
    json doc;
    doc["steps"] = trace.rows.size();
    doc["time_avg_objective"] = trace.time_avg_objective;
    doc["min_vmag"] = trace.min_vmag;
    doc["max_vmag"] = trace.max_vmag;
    doc["undervoltage_steps"] = trace.undervoltage_steps;
    doc["overvoltage_steps"] = trace.overvoltage_steps;
    doc["plant_failures"] = trace.plant_failures;
    doc["armijo_exhaustions"] = trace.armijo_exhaustions;
    return doc.dump(2) + "\n";
}

std::string solve_trace_to_csv(const std::vector<IterationRecord>& trace) {
    std::ostringstream out;
    out << "iter,objective,alpha,backtracks,active_set_size,step_inf\n";
    for (const IterationRecord& r : trace)
        out << r.iter << ',' << format_scalar(r.objective) << ',' << format_scalar(r.alpha) << ','
            << r.backtracks << ',' << r.active_size << ',' << format_scalar(r.step_inf) << "\n";
    return out.str();
}

std::string voltage_table_to_csv(const NetworkModel& net, const Vector& squared_magnitudes,
                                 const ComplexVector* node_voltages) {
    std::ostringstream out;
    out << "node,v_pu2,vmag_pu";
    if (node_voltages) out << ",v_re,v_im";
    out << "\n";
    for (Index k = 0; k < net.node_count(); ++k) {
        out << net.node_label(k) << ',' << format_scalar(squared_magnitudes[k]) << ','
            << format_scalar(std::sqrt(std::max(0.0, squared_magnitudes[k])));
        if (node_voltages) out << ',' << format_scalar((*node_voltages)[k].real()) << ','
                               << format_scalar((*node_voltages)[k].imag());
        out << "\n";
    }
    return out.str();
}

int CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (first) {
            table.header = std::move(cells);
            first = false;
            continue;
        }
        std::vector<Scalar> row;
        row.reserve(cells.size());
        for (const std::string& c : cells) {
            try {
                row.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw_data("csv: non-numeric cell '" + c + "'");
            }
        }
        if (row.size() != table.header.size()) throw_data("csv: row width differs from header");
        table.rows.push_back(std::move(row));
    }
    if (first) throw_data("csv: empty document");
    return table;
}

}  // namespace vvc
