#include "psfcp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "psfcp/conformal.hpp"

namespace psfcp {

std::string to_string(Method m) {
    switch (m) {
        case Method::Fcp: return "fcp";
        case Method::RobFcp: return "rob-fcp";
        case Method::PsoFedRob: return "psofed-rob";
    }
    return "psofed-rob";
}

Method parse_method(std::string_view name) {
    if (name == "fcp") return Method::Fcp;
    if (name == "rob-fcp") return Method::RobFcp;
    if (name == "psofed-rob") return Method::PsoFedRob;
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::string to_string(NormalizationMode m) {
    switch (m) {
        case NormalizationMode::Noise: return "noise";
        case NormalizationMode::Model: return "model";
        case NormalizationMode::Fixed: return "fixed";
    }
    return "noise";
}

NormalizationMode parse_normalization_mode(std::string_view name) {
    if (name == "noise") return NormalizationMode::Noise;
    if (name == "model") return NormalizationMode::Model;
    if (name == "fixed") return NormalizationMode::Fixed;
    throw std::invalid_argument("unknown r_max mode '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
    training.validate();
    data.validate();
    if (data.n_cal == 0) throw std::invalid_argument("config: calibration split must be non-empty");
    if (data.n_train == 0 && training.rounds > 0)
        throw std::invalid_argument("config: training split is empty but rounds > 0");
    if (attack.byzantine_count >= training.num_clients)
        throw std::invalid_argument("config: need at least one benign client");
    if (!(attack.attack_probability >= 0.0 && attack.attack_probability <= 1.0))
        throw std::invalid_argument("config: attack_probability must lie in [0, 1]");
    if (!(attack.noise_variance >= 0.0)) throw std::invalid_argument("config: attack noise variance must be >= 0");
    attack.calibration.validate();
    if (!(calibration.alpha > 0.0 && calibration.alpha < 1.0))
        throw std::invalid_argument("config: alpha must lie in (0, 1)");
    if (calibration.bins == 0) throw std::invalid_argument("config: bins must be positive");
    if (!(calibration.normalization.multiplier > 0.0))
        throw std::invalid_argument("config: r_max multiplier must be positive");
    if (calibration.normalization.mode == NormalizationMode::Fixed && !(calibration.normalization.value > 0.0))
        throw std::invalid_argument("config: fixed r_max must be positive");
    if (method != Method::Fcp && calibration.selection == SelectionRule::KnownCount &&
        training.num_clients - attack.byzantine_count < 2)
        throw std::invalid_argument("config: known-count detection needs at least two benign clients");
    if (method != Method::Fcp && calibration.selection == SelectionRule::Mad && training.num_clients < 3)
        throw std::invalid_argument("config: MAD detection needs at least three clients");
    if (n_trials == 0) throw std::invalid_argument("config: n_trials must be >= 1");
}

bool TrialRecord::detection_exact() const {
    return n_detected_false_benign == 0 && n_detected_true_benign + byzantine.size() == num_clients;
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

void ExperimentResult::aggregate() {
    std::vector<double> cov, width, mse, q;
    for (const auto& t : trials) {
        cov.push_back(t.coverage);
        width.push_back(t.mean_width);
        mse.push_back(t.final_mse);
        q.push_back(t.q_hat);
    }
    coverage = summarize(cov);
    mean_width = summarize(width);
    final_mse = summarize(mse);
    q_hat = summarize(q);
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial) { return derive_seed(master_seed, trial); }

namespace {

double normalization_constant(const NormalizationConfig& norm, const std::vector<ClientDataConfig>& clients,
                              double param_error) {
    double max_noise = 0.0;
    double max_input = 0.0;
    for (const auto& c : clients) {
        max_noise = std::max(max_noise, c.noise_variance);
        max_input = std::max(max_input, c.input_variance);
    }
    switch (norm.mode) {
        case NormalizationMode::Noise: return norm.multiplier * std::sqrt(max_noise);
        case NormalizationMode::Model: return norm.multiplier * std::sqrt(max_noise + max_input * param_error);
        case NormalizationMode::Fixed: return norm.value;
    }
    return norm.value;
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t trial, const TrialOptions& opts) {
    cfg.validate();
    const std::uint64_t seed = trial_seed(cfg.master_seed, trial);
    const std::size_t num_clients = cfg.training.num_clients;

    Rng config_rng(derive_seed(seed, Stream::ClientConfigs));
    const auto clients = draw_client_configs(num_clients, config_rng, cfg.data);
    const TrueModel truth = TrueModel::unit_energy(cfg.training.dim);

    std::vector<ClientDataset> data;
    data.reserve(num_clients);
    for (std::size_t k = 0; k < num_clients; ++k) {
        Rng rng(derive_seed(seed, Stream::ClientData, k));
        data.push_back(build_dataset(truth, clients[k], rng));
    }

    TrainingAttackConfig attack;
    attack.attack_probability = cfg.attack.attack_probability;
    attack.noise_variance = cfg.attack.noise_variance;
    if (cfg.attack.placement == ByzantinePlacement::First) {
        attack.byzantine = first_clients(cfg.attack.byzantine_count);
    } else {
        Rng rng(derive_seed(seed, Stream::ByzantineSelection));
        attack.byzantine = random_clients(num_clients, cfg.attack.byzantine_count, rng);
    }

    TrainingConfig training = cfg.training;
    if (cfg.method != Method::PsoFedRob) training.shared = training.dim;

    std::vector<SampleList> train_sets;
    train_sets.reserve(num_clients);
    for (auto& ds : data) train_sets.push_back(std::move(ds.train));
    TrainingStreams streams = TrainingStreams::from_seed(seed);
    TrainingResult trained = run_training(training, truth, train_sets, attack, streams);
    train_sets.clear();

    TrialRecord rec;
    rec.trial = trial;
    rec.num_clients = num_clients;
    rec.method = cfg.method;
    rec.attack = cfg.attack.calibration.kind;
    rec.byzantine = attack.byzantine;
    rec.final_mse = trained.mse_trace.empty() ? squared_distance(trained.global, truth.w_star)
                                              : trained.mse_trace.back();
    rec.r_max = normalization_constant(cfg.calibration.normalization, clients, rec.final_mse);

    const HistogramSpec spec = HistogramSpec::uniform(cfg.calibration.bins, rec.r_max);
    const bool fabricate = cfg.attack.calibration.kind != CalibrationAttackKind::None;

    // Reports as the server sees them: raw scores for fcp, histograms otherwise.
    std::vector<ScoreSet> reports;
    std::vector<CharacterizationVector> vectors;
    reports.reserve(num_clients);
    vectors.reserve(num_clients);
    for (std::size_t k = 0; k < num_clients; ++k) {
        if (fabricate && attack.is_byzantine(k)) {
            Rng rng(derive_seed(seed, Stream::Fabrication, k));
            auto normalized = fabricate_scores(cfg.attack.calibration, data[k].cal.size(), rng);
            vectors.push_back(characterize_normalized(normalized, k, spec));
            ScoreSet raw{k, std::move(normalized)};
            for (auto& r : raw.scores) r *= rec.r_max;
            reports.push_back(std::move(raw));
        } else {
            reports.push_back(nonconformity_scores(trained.global, data[k].cal, k));
            vectors.push_back(characterize(reports.back(), spec));
        }
    }

    if (cfg.method == Method::Fcp) {
        rec.q_hat = pooled_quantile(reports, cfg.calibration.alpha);
        rec.detected_benign = first_clients(num_clients);
    } else {
        const std::size_t benign_count = num_clients - attack.byzantine.size();
        MaliciousnessReport report =
            detect_byzantine(vectors, benign_count, cfg.calibration.selection, cfg.calibration.mad_cutoff);
        std::vector<CharacterizationVector> kept;
        kept.reserve(report.benign.size());
        for (ClientId k : report.benign) kept.push_back(vectors[k]);
        rec.q_hat = histogram_quantile(kept, spec, cfg.calibration.alpha);
        rec.detected_benign = std::move(report.benign);
        rec.maliciousness = std::move(report.scores);
    }
    for (ClientId k : rec.detected_benign) {
        if (attack.is_byzantine(k)) ++rec.n_detected_false_benign;
        else ++rec.n_detected_true_benign;
    }

    std::vector<SampleList> test_sets;
    for (std::size_t k = 0; k < num_clients; ++k)
        if (cfg.coverage_includes_byzantine || !attack.is_byzantine(k)) test_sets.push_back(std::move(data[k].test));
    const CoverageReport cov = coverage_and_width(trained.global, rec.q_hat, test_sets);
    rec.coverage = cov.coverage;
    rec.mean_width = cov.mean_width;

    if (opts.keep_trace) rec.mse_trace = std::move(trained.mse_trace);
    if (opts.keep_histograms) rec.histograms = std::move(vectors);
    return rec;
}

namespace {

ExperimentResult make_result(const ExperimentConfig& cfg, std::vector<TrialRecord> trials) {
    ExperimentResult r;
    r.method = cfg.method;
    r.attack = cfg.attack.calibration.kind;
    r.master_seed = cfg.master_seed;
    r.trials = std::move(trials);
    r.aggregate();
    return r;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const TrialOptions& opts) {
    cfg.validate();
    std::vector<TrialRecord> trials(cfg.n_trials);
    const auto n = static_cast<std::ptrdiff_t>(cfg.n_trials);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            trials[static_cast<std::size_t>(i)] = run_trial(cfg, static_cast<std::size_t>(i), opts);
        } catch (...) {
#pragma omp critical(psfcp_trial_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return make_result(cfg, std::move(trials));
}

ExperimentResult run_experiment_serial(const ExperimentConfig& cfg, const TrialOptions& opts) {
    cfg.validate();
    std::vector<TrialRecord> trials;
    trials.reserve(cfg.n_trials);
    for (std::size_t i = 0; i < cfg.n_trials; ++i) trials.push_back(run_trial(cfg, i, opts));
    return make_result(cfg, std::move(trials));
}

std::vector<ExperimentResult> run_sweep(const ExperimentConfig& base, const std::vector<Method>& methods,
                                        const std::vector<CalibrationAttack>& attacks, const TrialOptions& opts) {
    std::vector<ExperimentResult> out;
    for (Method m : methods) {
        for (const auto& a : attacks) {
            ExperimentConfig cfg = base;
            cfg.method = m;
            cfg.attack.calibration = a;
            out.push_back(run_experiment(cfg, opts));
        }
    }
    return out;
}

}  // namespace psfcp
