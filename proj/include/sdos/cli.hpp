#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdos/dataset.hpp"
#include "sdos/diagnostics.hpp"
#include "sdos/inference.hpp"
#include "sdos/models.hpp"

namespace sdos::cli {

struct RunConfig {
    std::string model;
    std::string method;
    std::vector<int> iters = {1000};
    std::vector<int> Ms = {1};
    int K = 100;
    std::uint64_t seed = 0;
    double level = 0.95;
    std::string out;
    std::string format = "json";
    int jobs = 1;
    std::string data_path;
    bool standardize = true;
    std::string plot_out;
};

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

inline const std::set<std::string>& valid_methods() {
    static const std::set<std::string> s = {"laplace", "laplace-adjusted", "vi", "iw-laplace", "iwvi", "exact"};
    return s;
}

inline const std::set<std::string>& valid_models() {
    static const std::set<std::string> s = {"gaussian_toy", "glm_binomial", "heart_transplants",
                                            "hospitals",    "ionosphere",   "concrete"};
    return s;
}

namespace cli_detail {

inline std::string join(const std::set<std::string>& xs) {
    std::string out;
    for (const auto& x : xs) {
        if (!out.empty()) out += ", ";
        out += x;
    }
    return out;
}

}  // namespace cli_detail

inline void validate(const RunConfig& c) {
    if (!valid_models().count(c.model)) {
        throw UsageError("--model: unknown model '" + c.model + "'; valid: " + cli_detail::join(valid_models()));
    }
    if (!valid_methods().count(c.method)) {
        throw UsageError("--method: unknown method '" + c.method + "'; valid: " + cli_detail::join(valid_methods()));
    }
    if (c.K < 2) throw UsageError("--K: must be >= 2");
    if (c.iters.empty()) throw UsageError("--iters: at least one value required");
    for (int it : c.iters) {
        if (it < 1) throw UsageError("--iters: values must be >= 1");
    }
    for (int m : c.Ms) {
        if (m < 1) throw UsageError("--M: values must be >= 1");
    }
    if (!(c.level > 0.0 && c.level < 1.0)) throw UsageError("--level: must be in (0,1)");
    if (c.jobs < 1) throw UsageError("--jobs: must be >= 1");
    if (c.format != "json" && c.format != "csv") throw UsageError("--format: must be json or csv");
    if ((c.model == "ionosphere" || c.model == "concrete") && c.data_path.empty()) {
        throw UsageError("--data: required for model '" + c.model + "'");
    }
    if (c.method == "exact" && c.model != "gaussian_toy" && c.model != "concrete") {
        throw UsageError("--method: exact requires a conjugate model (gaussian_toy, concrete)");
    }
}

inline RunConfig parse_args(const std::vector<std::string>& args) {
    RunConfig c;
    CLI::App app{"Simulation-based symmetric-KL diagnostic for approximate inference"};
    app.add_option("--model", c.model, "Model id (" + cli_detail::join(valid_models()) + ")")->required();
    app.add_option("--method", c.method, "Inference method (" + cli_detail::join(valid_methods()) + ")")->required();
    app.add_option("--iters", c.iters, "Optimizer iteration budgets (comma list)")->delimiter(',');
    app.add_option("--M", c.Ms, "Importance-sample counts (comma list)")->delimiter(',');
    app.add_option("--K", c.K, "Number of simulate-infer-evaluate repetitions");
    app.add_option("--seed", c.seed, "Master seed");
    app.add_option("--level", c.level, "Confidence level");
    app.add_option("--out", c.out, "Output file path");
    app.add_option("--format", c.format, "Output format: json or csv");
    app.add_option("--jobs", c.jobs, "Worker threads for repetitions");
    app.add_option("--data", c.data_path, "Dataset CSV (ionosphere, concrete)");
    app.add_flag("--standardize,!--no-standardize", c.standardize, "Standardize dataset columns");
    app.add_option("--plot-out", c.plot_out, "Also write plot-ready point data to this path");

    std::vector<const char*> argv;
    argv.push_back("sdos_cli");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    validate(c);
    return c;
}

inline Model make_model(const RunConfig& c) {
    if (c.model == "gaussian_toy") return gaussian_toy();
    if (c.model == "glm_binomial") return glm_binomial();
    if (c.model == "heart_transplants") return heart_transplants();
    if (c.model == "hospitals") return hospitals();
    if (c.model == "ionosphere") return ionosphere(load_dataset(c.data_path, c.standardize));
    if (c.model == "concrete") return concrete(load_dataset(c.data_path, c.standardize));
    throw UsageError("--model: unknown model '" + c.model + "'");
}

struct SweepCell {
    int iters = 0;
    int M = 1;
    std::optional<DiagnosticResult> result;  // empty when every repetition failed
};

inline QFitter make_fitter(const RunConfig& c, int iters, int M) {
    if (c.method == "laplace") return make_laplace_fitter(iters);
    if (c.method == "laplace-adjusted" || c.method == "iw-laplace") return make_adjusted_laplace_fitter(iters);
    if (c.method == "vi") return make_vi_fitter(iters);
    if (c.method == "iwvi") return make_iwvi_fitter(M, iters);
    if (c.method == "exact") return make_exact_fitter();
    throw UsageError("--method: unknown method '" + c.method + "'");
}

inline std::vector<SweepCell> execute_sweep(const RunConfig& c, const Model& model) {
    std::vector<SweepCell> cells;
    const bool iw = c.method == "iw-laplace" || c.method == "iwvi";
    for (int iters : c.iters) {
        for (int M : c.Ms) {
            SweepCell cell;
            cell.iters = iters;
            cell.M = M;
            const QFitter fitter = make_fitter(c, iters, M);
            try {
                DiagnosticResult r = iw ? sdos_iw(model, fitter, M, c.K, c.seed, c.jobs, c.level)
                                        : (model.conditional
                                               ? sdos_conditional(model, fitter, c.K, c.seed, c.jobs, c.level)
                                               : sdos_joint(model, fitter, c.K, c.seed, c.jobs, c.level));
                r.meta.method = c.method;
                r.meta.iters = iters;
                r.meta.M = M;
                cell.result = std::move(r);
            } catch (const CurvatureFailure&) {
                // every repetition of this cell failed; recorded, not fatal
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

inline nlohmann::json sweep_to_json(const RunConfig& c, const std::vector<SweepCell>& cells) {
    nlohmann::json j;
    j["model"] = c.model;
    j["method"] = c.method;
    j["cells"] = nlohmann::json::array();
    for (const auto& cell : cells) {
        nlohmann::json jc;
        jc["iters"] = cell.iters;
        jc["M"] = cell.M;
        jc["K"] = c.K;
        jc["seed"] = c.seed;
        if (cell.result) {
            jc["mean"] = cell.result->mean;
            jc["std_error"] = cell.result->std_error;
            jc["ci"] = {cell.result->ci.first, cell.result->ci.second};
            jc["failure_count"] = cell.result->meta.failure_count;
            jc["d_values"] = cell.result->d_values;
        } else {
            jc["mean"] = nullptr;
            jc["std_error"] = nullptr;
            jc["ci"] = nullptr;
            jc["failure_count"] = c.K;
            jc["d_values"] = nlohmann::json::array();
        }
        j["cells"].push_back(std::move(jc));
    }
    return j;
}

namespace cli_detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace cli_detail

inline std::string sweep_to_csv(const RunConfig& c, const std::vector<SweepCell>& cells) {
    std::string out = "model,method,iters,M,K,seed,mean,std_error,ci_lo,ci_hi,failure_count\n";
    for (const auto& cell : cells) {
        out += c.model + "," + c.method + "," + std::to_string(cell.iters) + "," + std::to_string(cell.M) + "," +
               std::to_string(c.K) + "," + std::to_string(c.seed) + ",";
        if (cell.result) {
            out += cli_detail::fmt_double(cell.result->mean) + "," + cli_detail::fmt_double(cell.result->std_error) +
                   "," + cli_detail::fmt_double(cell.result->ci.first) + "," +
                   cli_detail::fmt_double(cell.result->ci.second) + "," +
                   std::to_string(cell.result->meta.failure_count);
        } else {
            out += ",,,," + std::to_string(c.K);
        }
        out += "\n";
    }
    return out;
}

// Plot-ready points: x is the iteration budget when it is the swept axis,
// otherwise M; y/y_lo/y_hi echo the cell mean and confidence interval.
inline nlohmann::json plot_data(const RunConfig& c, const std::vector<SweepCell>& cells) {
    std::vector<const SweepCell*> ok;
    for (const auto& cell : cells) {
        if (cell.result) ok.push_back(&cell);
    }
    if (ok.empty()) throw std::runtime_error("emit_plot_data: no successful cells");
    const bool x_is_iters = c.iters.size() > 1 || c.Ms.size() <= 1;
    std::stable_sort(ok.begin(), ok.end(), [&](const SweepCell* a, const SweepCell* b) {
        return (x_is_iters ? a->iters : a->M) < (x_is_iters ? b->iters : b->M);
    });
    nlohmann::json points = nlohmann::json::array();
    for (const SweepCell* cell : ok) {
        nlohmann::json p;
        p["x"] = x_is_iters ? cell->iters : cell->M;
        p["y"] = cell->result->mean;
        p["y_lo"] = cell->result->ci.first;
        p["y_hi"] = cell->result->ci.second;
        p["series"] = x_is_iters ? (c.method + " M=" + std::to_string(cell->M))
                                 : (c.method + " iters=" + std::to_string(cell->iters));
        points.push_back(std::move(p));
    }
    return points;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

inline void emit_plot_data(const RunConfig& c, const std::vector<SweepCell>& cells, const std::string& path) {
    write_file(path, plot_data(c, cells).dump(2) + "\n");
}

// Runs the configured sweep and writes the requested files. Returns 0 when at
// least one cell produced a result, 1 when every cell failed.
inline int run_sweep(const RunConfig& c) {
    const Model model = make_model(c);
    const std::vector<SweepCell> cells = execute_sweep(c, model);
    const bool any_ok = std::any_of(cells.begin(), cells.end(), [](const SweepCell& x) { return bool(x.result); });
    if (!c.out.empty()) {
        if (c.format == "json") {
            write_file(c.out, sweep_to_json(c, cells).dump(2) + "\n");
        } else {
            write_file(c.out, sweep_to_csv(c, cells));
        }
    }
    if (!c.plot_out.empty() && any_ok) emit_plot_data(c, cells, c.plot_out);
    return any_ok ? 0 : 1;
}

}  // namespace sdos::cli
