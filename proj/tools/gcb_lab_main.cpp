// gcb-lab: simulate diffusion ensembles, evaluate concentration-constant
// curves, estimate empirical concentration quantities, and verify the
// theoretical bounds end to end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gcb/ensemble_io.hpp"
#include "gcb/experiment.hpp"
#include "gcb/models.hpp"
#include "gcb/version.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitUsage = 3;

struct Overrides {
    std::optional<uint64_t> seed;
    std::optional<long> paths;
    std::optional<double> dt;
    std::optional<int> workers;
};

gcb::ExperimentConfig load_with_overrides(const std::string& path,
                                          const Overrides& ov) {
    gcb::ExperimentConfig cfg = gcb::load_config(path);
    if (ov.seed) {
        cfg.seed = *ov.seed;
    }
    if (ov.paths) {
        cfg.n_paths = *ov.paths;
    }
    if (ov.dt) {
        cfg.grid = gcb::TimeGrid::make(cfg.grid.t0, cfg.grid.t1, *ov.dt);
    }
    if (ov.workers) {
        cfg.workers = *ov.workers;
    }
    return cfg;
}

int verdict_exit_code(const std::string& overall) {
    if (overall == "PASS") {
        return kExitPass;
    }
    if (overall == "FAIL") {
        return kExitFail;
    }
    return kExitInconclusive;
}

std::string sanitize_time_label(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    std::string s(buf);
    for (auto& c : s) {
        if (c == '.') {
            c = 'p';
        }
    }
    return s;
}

std::vector<double> parse_t_grid(const std::string& text) {
    double a = 0.0, b = 0.0;
    long n = 0;
    char c1 = 0, c2 = 0;
    std::stringstream ss(text);
    if (!(ss >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 2 ||
        b < a) {
        throw std::invalid_argument("--t-grid expects a:b:n with n >= 2");
    }
    std::vector<double> grid(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        grid[static_cast<std::size_t>(i)] =
            a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return grid;
}

void write_text(const std::string& path, const std::string& body) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << body;
}

int run_verify(const std::string& config_path, const Overrides& ov,
               std::string out_prefix, const std::string& formats) {
    gcb::ExperimentConfig cfg = load_with_overrides(config_path, ov);
    const auto report = gcb::run_experiment(cfg);

    for (const auto& row : report.checkpoints) {
        std::printf("t=%-8g D_theory=%-12.6g D_hat=%-12.6g se=%-10.4g %s\n",
                    row.t, row.d_theory, row.d_hat, row.se,
                    row.verdict.c_str());
    }
    std::printf("overall: %s\n", report.overall.c_str());

    if (out_prefix.empty()) {
        out_prefix = cfg.out_prefix.empty()
                         ? "out/" + report.experiment_id
                         : cfg.out_prefix;
    }
    std::stringstream fmts(formats);
    std::string fmt;
    while (std::getline(fmts, fmt, ',')) {
        if (fmt.empty()) {
            continue;
        }
        const std::string ext = fmt == "md" ? ".report.md"
                                : fmt == "csv" ? ".report.csv"
                                               : ".report.json";
        gcb::emit_report(report, fmt, out_prefix + ext);
    }
    return verdict_exit_code(report.overall);
}

int run_simulate(const std::string& config_path, const Overrides& ov,
                 std::string out_prefix, const std::string& format) {
    gcb::ExperimentConfig cfg = load_with_overrides(config_path, ov);
    const auto spec = gcb::build_model(cfg);
    const auto set =
        gcb::simulate_ensemble(spec, cfg.init, cfg.grid, cfg.n_paths, cfg.seed,
                               cfg.checkpoints, cfg.workers);
    if (out_prefix.empty()) {
        out_prefix = cfg.out_prefix.empty()
                         ? "out/" + (cfg.id.empty() ? cfg.model_id : cfg.id)
                         : cfg.out_prefix;
    }
    const std::string ext = format == "csv" ? ".csv" : ".bin";
    for (const auto& ens : set.checkpoints) {
        const std::string path =
            out_prefix + "_t" + sanitize_time_label(ens.time) + ext;
        const std::filesystem::path p(path);
        if (p.has_parent_path()) {
            std::filesystem::create_directories(p.parent_path());
        }
        gcb::write_ensemble(ens, path);
        std::printf("wrote %s (%ld paths, dim %d)\n", path.c_str(),
                    ens.n_paths, ens.dim);
    }
    if (set.blowups.count > 0) {
        std::printf("blow-ups: %ld (first: path %ld at t=%g)\n",
                    set.blowups.count, set.blowups.first_path,
                    set.blowups.first_time);
    }
    return kExitPass;
}

int run_bounds(const std::string& params_path, const std::string& theorem,
               const std::string& t_grid_text, const std::string& out_path) {
    gcb::ExperimentConfig cfg = gcb::load_config(params_path);
    if (!theorem.empty()) {
        cfg.theorem = theorem;
    }
    const auto spec = gcb::build_model(cfg);
    const auto curve = gcb::build_bound_curve(cfg, spec);
    const auto grid = parse_t_grid(t_grid_text);

    std::ostringstream csv;
    csv << "t,D_t\n";
    char buf[80];
    for (double t : grid) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, curve.at(t));
        csv << buf;
    }
    write_text(out_path, csv.str());

    nlohmann::ordered_json sidecar;
    sidecar["theorem"] = curve.theorem;
    sidecar["version"] = gcb::kVersion;
    nlohmann::ordered_json params;
    for (const auto& [k, v] : curve.params) {
        params[k] = v;
    }
    sidecar["params"] = std::move(params);
    if (curve.d_infinity) {
        sidecar["d_infinity"] = *curve.d_infinity;
    }
    sidecar["notes"] = curve.notes;

    std::string sidecar_path = out_path;
    const auto dot = sidecar_path.rfind('.');
    if (dot != std::string::npos) {
        sidecar_path = sidecar_path.substr(0, dot);
    }
    sidecar_path += ".provenance.json";
    write_text(sidecar_path, sidecar.dump(2) + "\n");

    std::printf("wrote %s and %s\n", out_path.c_str(), sidecar_path.c_str());
    return kExitPass;
}

int run_estimate(const std::string& ensemble_path, const std::string& name,
                 const std::string& params_path, const std::string& out_path) {
    const gcb::Ensemble ens = gcb::read_ensemble(ensemble_path);

    // Loose key = value parameter file; sections optional.
    std::map<std::string, double> params;
    if (!params_path.empty()) {
        std::ifstream in(params_path);
        if (!in) {
            throw std::runtime_error("cannot open " + params_path);
        }
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) {
                line = line.substr(0, hash);
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                continue;
            }
            std::stringstream key_ss(line.substr(0, eq));
            std::string key;
            key_ss >> key;
            std::stringstream val_ss(line.substr(eq + 1));
            double value = 0.0;
            if (key_ss && (val_ss >> value)) {
                params[key] = value;
            }
        }
    }
    auto param_or = [&](const std::string& key, double fallback) {
        const auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };

    nlohmann::ordered_json doc;
    doc["estimator"] = name;
    const std::vector<double> origin(static_cast<std::size_t>(ens.dim), 0.0);

    if (name == "gcb") {
        const auto family = gcb::make_default_test_family(ens.dim);
        const auto g = gcb::empirical_gcb_constant(ens, family);
        doc["value"] = g.est.value;
        doc["std_error"] = g.est.std_error;
        doc["n"] = g.est.n;
        doc["valid"] = g.est.valid;
        doc["provenance"] = "max over default test family; arg-max member: " +
                            g.argmax_member;
    } else if (name == "exp_square") {
        const double a = param_or("a", 0.25);
        const auto est = gcb::exp_square_moment(ens, a, origin);
        doc["value"] = est.value;
        doc["std_error"] = est.std_error;
        doc["n"] = est.n;
        doc["valid"] = est.valid;
        doc["provenance"] = "mean exp(a d(0,x)^2) with a=" + std::to_string(a);
    } else if (name == "tail") {
        const double r = param_or("r", 1.0);
        const auto est = gcb::tail_probability(ens, origin, r);
        doc["value"] = est.value;
        doc["std_error"] = est.std_error;
        doc["n"] = est.n;
        doc["valid"] = est.valid;
        doc["provenance"] =
            "empirical frequency of d(0,x) > mean + r, r=" + std::to_string(r);
    } else if (name == "chernoff") {
        const double d = param_or("d", 0.5);
        const double rmax = param_or("rmax", 4.0);
        const int points = static_cast<int>(param_or("points", 41));
        std::vector<double> grid(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
            grid[static_cast<std::size_t>(i)] =
                rmax * static_cast<double>(i) / static_cast<double>(points - 1);
        }
        const auto chern = gcb::chernoff_check(ens, origin, d, grid);
        long violations = 0;
        for (const auto& row : chern.rows) {
            violations += row.violation ? 1 : 0;
        }
        doc["value"] = static_cast<double>(violations);
        doc["std_error"] = 0.0;
        doc["n"] = ens.n_paths;
        doc["valid"] = chern.passed;
        doc["provenance"] = "violations of exp(-r^2/4D) on the r-grid, D=" +
                            std::to_string(d);
    } else {
        throw std::invalid_argument(
            "unknown estimator '" + name +
            "' (expected gcb, exp_square, tail, chernoff)");
    }
    write_text(out_path, doc.dump(2) + "\n");
    std::printf("wrote %s\n", out_path.c_str());
    return kExitPass;
}

int run_list() {
    const auto& catalog = gcb::experiment_catalog();
    std::printf("%-16s %-10s %-9s %s\n", "id", "theorem", "runtime",
                "description");
    for (const auto& entry : catalog) {
        std::printf("%-16s %-10s %-9s %s\n", entry.id.c_str(),
                    entry.theorem.c_str(), entry.runtime.c_str(),
                    entry.description.c_str());
        std::printf("%-16s config: %s\n", "", entry.config_file.c_str());
    }
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"concentration-bound verification lab"};
    app.set_version_flag("--version", gcb::kVersion);
    app.require_subcommand(1);

    Overrides ov;
    std::string config_path, out_path, formats = "json,csv";
    std::string theorem, t_grid = "0:10:101", ensemble_path, estimator,
                params_path, sim_format = "csv";

    auto add_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--seed", ov.seed, "override the config seed");
        cmd->add_option("--paths", ov.paths, "override the path count");
        cmd->add_option("--dt", ov.dt, "override the step size");
        cmd->add_option("--workers", ov.workers, "worker thread count");
    };

    auto* verify = app.add_subcommand("verify", "run an experiment end to end");
    verify->add_option("--config", config_path, "experiment config file")
        ->required();
    verify->add_option("--out", out_path, "output prefix for reports");
    verify->add_option("--format", formats, "comma list of json,csv,md");
    add_overrides(verify);

    auto* simulate = app.add_subcommand("simulate", "write checkpoint ensembles");
    simulate->add_option("--config", config_path, "experiment config file")
        ->required();
    simulate->add_option("--out", out_path, "output prefix for ensembles");
    simulate->add_option("--format", sim_format, "csv or bin");
    add_overrides(simulate);

    auto* bounds = app.add_subcommand("bounds", "evaluate a theory curve");
    bounds->add_option("--params", params_path, "config file with the inputs")
        ->required();
    bounds->add_option("--theorem", theorem, "override the theorem tag");
    bounds->add_option("--t-grid", t_grid, "a:b:n evaluation grid");
    bounds->add_option("--out", out_path, "output CSV path")->required();

    auto* estimate = app.add_subcommand("estimate", "run one estimator");
    estimate->add_option("--ensemble", ensemble_path, "ensemble file")
        ->required();
    estimate->add_option("--estimator", estimator, "estimator name")
        ->required();
    estimate->add_option("--params", params_path, "key = value parameter file");
    estimate->add_option("--out", out_path, "output report path")->required();

    auto* list = app.add_subcommand("list", "print the experiment catalog");
    (void)list;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (app.got_subcommand("verify")) {
            return run_verify(config_path, ov, out_path, formats);
        }
        if (app.got_subcommand("simulate")) {
            return run_simulate(config_path, ov, out_path, sim_format);
        }
        if (app.got_subcommand("bounds")) {
            return run_bounds(params_path, theorem, t_grid, out_path);
        }
        if (app.got_subcommand("estimate")) {
            return run_estimate(ensemble_path, estimator, params_path, out_path);
        }
        if (app.got_subcommand("list")) {
            return run_list();
        }
    } catch (const gcb::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const gcb::SimulationError& e) {
        std::cerr << "simulation failed: " << e.what() << "\n";
        return kExitInconclusive;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
