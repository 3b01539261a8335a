#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcb/bounds.hpp"
#include "gcb/engine.hpp"
#include "gcb/estimators.hpp"

namespace gcb {

/// Carries every schema violation found in a config, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    std::vector<std::string> errors;
};

struct ExperimentConfig {
    std::string id;

    std::string model_id;
    std::map<std::string, double> model_params;
    std::map<std::string, std::vector<double>> model_vectors;  // matrices etc.
    std::string sigma_fn_name;  // nonmarkov: "const" or "tanh_shift"

    InitialLaw init;

    TimeGrid grid;
    std::vector<double> checkpoints;
    long n_paths = 0;
    uint64_t seed = 0;
    int workers = 0;

    std::string theorem;
    std::map<std::string, double> bound_params;

    std::vector<std::string> estimators;  // "gcb" runs always
    std::map<std::string, double> estimator_params;
    std::vector<double> state_scale;  // per-coordinate scaling before estimation
    std::vector<double> couple_x, couple_y;

    std::string out_prefix;
};

/// Reads a config file; flat sectioned text by default, JSON when the file
/// starts with '{'. Throws ConfigError listing all schema violations.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin);
ExperimentConfig parse_config_json(const std::string& text,
                                   const std::string& origin);

ProcessSpec build_model(const ExperimentConfig& cfg);

/// The theory curve selected by cfg.theorem. For the "nonmarkov" theorem the
/// curve is assembled per checkpoint inside run_experiment (it needs the
/// measured moment bound), so this returns curves for the closed-form tags.
BoundCurve build_bound_curve(const ExperimentConfig& cfg,
                             const ProcessSpec& spec);

struct CheckpointResult {
    double t = 0.0;
    double d_theory = 0.0;
    double d_hat = 0.0;
    double se = 0.0;
    std::string argmax_member;
    std::string verdict;  // PASS / FAIL / INCONCLUSIVE
    std::vector<std::string> diagnostics;
    std::map<std::string, double> extras;
};

struct VerificationReport {
    std::string experiment_id;
    std::string theorem;
    std::string version;
    uint64_t seed = 0;
    double dt = 0.0;
    long n_paths = 0;
    std::string overall;  // worst verdict across checkpoints
    std::vector<CheckpointResult> checkpoints;
    std::vector<std::string> notes;
    std::map<std::string, double> extras;
};

/// Deterministic function of the config (including seed). Blow-ups beyond
/// the engine budget surface as INCONCLUSIVE with diagnostics rather than
/// propagating.
VerificationReport run_experiment(const ExperimentConfig& cfg);

std::string report_to_json(const VerificationReport& report,
                           bool with_timestamp = true);
std::string report_to_csv(const VerificationReport& report);
std::string report_to_markdown(const VerificationReport& report);

/// format is one of "json", "csv", "md".
void emit_report(const VerificationReport& report, const std::string& format,
                 const std::string& path);

struct CatalogEntry {
    std::string id;
    std::string theorem;
    std::string description;
    std::string config_file;  // relative to the repository root
    std::string runtime;      // declared budget
};

/// The shipped experiments, one per verified statement.
const std::vector<CatalogEntry>& experiment_catalog();

}  // namespace gcb
