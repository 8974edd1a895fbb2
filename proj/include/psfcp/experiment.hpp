#pragma once

// End-to-end trial pipeline: data -> federated training (with training-time
// attacks) -> per-client scores or fabrications -> method-specific quantile
// -> coverage and width on benign test data.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "psfcp/attacks.hpp"
#include "psfcp/psofed.hpp"
#include "psfcp/robust_calibration.hpp"
#include "psfcp/synthetic_data.hpp"

namespace psfcp {

enum class Method {
    Fcp,        // full sharing, pooled quantile over every report
    RobFcp,     // full sharing, histogram detection + benign-only quantile
    PsoFedRob,  // partial sharing, histogram detection + benign-only quantile
};

std::string to_string(Method m);
Method parse_method(std::string_view name);

enum class ByzantinePlacement { First, Random };

/// How the global score normalization constant is chosen.
enum class NormalizationMode {
    Noise,  // multiplier * max_k sigma_nu_k
    Model,  // multiplier * sqrt(max_k sigma_nu_k^2 + max_k varsigma_k^2 * ||w_hat - w*||^2)
    Fixed,  // value
};

struct NormalizationConfig {
    NormalizationMode mode = NormalizationMode::Fixed;
    double multiplier = 5.0;
    double value = 1.0;
};

std::string to_string(NormalizationMode m);
NormalizationMode parse_normalization_mode(std::string_view name);

struct AttackSettings {
    std::size_t byzantine_count = 20;
    ByzantinePlacement placement = ByzantinePlacement::First;
    double attack_probability = 0.25;
    double noise_variance = 0.1;
    CalibrationAttack calibration = CalibrationAttack::none();
};

struct CalibrationSettings {
    double alpha = 0.1;
    std::size_t bins = 100;
    NormalizationConfig normalization;
    SelectionRule selection = SelectionRule::KnownCount;
    double mad_cutoff = 3.0;
};

struct ExperimentConfig {
    TrainingConfig training;
    DataLaw data;
    AttackSettings attack;
    CalibrationSettings calibration;
    Method method = Method::PsoFedRob;
    std::size_t n_trials = 20;
    std::uint64_t master_seed = 1;
    bool coverage_includes_byzantine = false;

    /// Throws std::invalid_argument describing the first inconsistency.
    void validate() const;
};

struct TrialRecord {
    std::size_t trial = 0;
    Method method = Method::PsoFedRob;
    CalibrationAttackKind attack = CalibrationAttackKind::None;
    double coverage = 0.0;
    double mean_width = 0.0;
    double final_mse = 0.0;
    double q_hat = 0.0;
    double r_max = 0.0;
    std::size_t num_clients = 0;
    std::vector<ClientId> byzantine;         // ground truth S_B
    std::vector<ClientId> detected_benign;   // B; every client for fcp
    std::size_t n_detected_true_benign = 0;
    std::size_t n_detected_false_benign = 0;

    // Heavy per-trial artifacts; not part of the result files.
    std::vector<double> mse_trace;
    std::vector<double> maliciousness;
    std::vector<CharacterizationVector> histograms;

    bool detection_exact() const;
};

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for one trial
};

MetricSummary summarize(const std::vector<double>& values);

struct ExperimentResult {
    Method method = Method::PsoFedRob;
    CalibrationAttackKind attack = CalibrationAttackKind::None;
    std::uint64_t master_seed = 0;
    std::vector<TrialRecord> trials;
    MetricSummary coverage;
    MetricSummary mean_width;
    MetricSummary final_mse;
    MetricSummary q_hat;

    void aggregate();
};

/// Seed of trial i: derive_seed(master_seed, i). Independent of the method,
/// so methods compared at equal trial index see identical data and attacks.
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial);

struct TrialOptions {
    bool keep_trace = false;
    bool keep_histograms = false;
};

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t trial, const TrialOptions& opts = {});

/// Trials run concurrently under OpenMP; records are stored by trial index.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const TrialOptions& opts = {});

/// Sequential reference for run_experiment. Identical output.
ExperimentResult run_experiment_serial(const ExperimentConfig& cfg, const TrialOptions& opts = {});

/// Every (method, attack) combination, methods outer.
std::vector<ExperimentResult> run_sweep(const ExperimentConfig& base, const std::vector<Method>& methods,
                                        const std::vector<CalibrationAttack>& attacks,
                                        const TrialOptions& opts = {});

}  // namespace psfcp
