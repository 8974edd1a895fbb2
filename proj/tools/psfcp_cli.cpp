// psfcp: run, sweep and oracle subcommands over the federated conformal
// simulator. Exit codes: 0 success, 1 config error, 2 runtime error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "psfcp/experiment.hpp"
#include "psfcp/io.hpp"
#include "psfcp/reference.hpp"

namespace fs = std::filesystem;
using namespace psfcp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "csv";
};

ExperimentConfig resolve_config(const CommonOptions& opts) {
    ExperimentConfig cfg = opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
    if (opts.seed) cfg.master_seed = *opts.seed;
    return cfg;
}

void print_summary(const ExperimentResult& r) {
    std::printf("%-10s %-10s coverage %.4f +- %.4f  width %.4f +- %.4f  mse %.5f\n", to_string(r.method).c_str(),
                to_string(r.attack).c_str(), r.coverage.mean, r.coverage.stddev, r.mean_width.mean,
                r.mean_width.stddev, r.final_mse.mean);
}

int cmd_run(const CommonOptions& opts, const std::string& histogram_path, const std::string& trace_path) {
    const ExperimentConfig cfg = resolve_config(opts);
    const ResultFormat format = parse_result_format(opts.format);
    TrialOptions topts;
    topts.keep_histograms = !histogram_path.empty();
    topts.keep_trace = !trace_path.empty();
    std::vector<ExperimentResult> results{run_experiment(cfg, topts)};
    print_summary(results.front());
    if (!opts.out.empty()) emit_results(results, opts.out, format);
    if (!histogram_path.empty()) emit_histograms(results, histogram_path);
    if (!trace_path.empty()) write_file_atomic(trace_path, traces_to_csv(results));
    return kExitOk;
}

int cmd_sweep(const CommonOptions& opts, const std::vector<std::string>& method_names,
              const std::vector<std::string>& attack_names) {
    const ExperimentConfig cfg = resolve_config(opts);
    const ResultFormat format = parse_result_format(opts.format);
    std::vector<Method> methods;
    std::vector<CalibrationAttack> attacks;
    try {
        for (const auto& m : method_names) methods.push_back(parse_method(m));
        for (const auto& a : attack_names) {
            CalibrationAttack atk = cfg.attack.calibration;
            atk.kind = parse_calibration_attack(a);
            attacks.push_back(atk);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    TrialOptions topts;
    topts.keep_histograms = true;
    auto results = run_sweep(cfg, methods, attacks, topts);
    for (auto& r : results) {
        print_summary(r);
        for (auto& t : r.trials)
            if (t.trial != 0) t.histograms.clear();
    }
    if (!opts.out.empty()) {
        const fs::path dir = opts.out;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create output directory " + dir.string());
        emit_results(results, dir / (format == ResultFormat::Csv ? "results.csv" : "results.json"), format);
        emit_plotdata(results, dir / "plotdata.csv");
        emit_histograms(results, dir / "histograms.csv");
    }
    return kExitOk;
}

int cmd_oracle(const CommonOptions& opts, std::size_t cases, std::size_t rounds) {
    const ExperimentConfig cfg = resolve_config(opts);
    const ResultFormat format = parse_result_format(opts.format);
    const auto quantiles = reference::quantile_oracle(cases, cfg.calibration.bins, cfg.calibration.alpha,
                                                      derive_seed(cfg.master_seed, 0x0A11CEULL));
    std::size_t quantile_pass = 0;
    double worst_ratio = 0.0;
    for (const auto& q : quantiles) {
        if (q.within_bin()) ++quantile_pass;
        worst_ratio = std::max(worst_ratio, q.gap() / q.bin_width);
    }

    TrainingAttackConfig attack;
    attack.attack_probability = cfg.attack.attack_probability;
    attack.noise_variance = cfg.attack.noise_variance;
    attack.byzantine = first_clients(cfg.attack.byzantine_count);
    const auto eq = reference::check_full_sharing_equivalence(
        cfg.training.dim, cfg.training.num_clients, cfg.training.participants_per_round, rounds,
        cfg.training.step_size, attack, cfg.master_seed);

    std::printf("quantile oracle: %zu/%zu within one bin width (worst gap %.3f bins)\n", quantile_pass,
                quantiles.size(), worst_ratio);
    std::printf("full-sharing equivalence: %zu/%zu rounds bit-identical\n", eq.rounds - eq.mismatched_rounds,
                eq.rounds);

    if (!opts.out.empty()) {
        if (format == ResultFormat::Csv) {
            std::string csv = "case,num_clients,total_points,alpha,r_max,bin_width,pooled,histogram,gap,within_bin\n";
            for (const auto& q : quantiles) {
                csv += std::to_string(q.index) + ',' + std::to_string(q.num_clients) + ',' +
                       std::to_string(q.total_points) + ',' + format_double(q.alpha) + ',' + format_double(q.r_max) +
                       ',' + format_double(q.bin_width) + ',' + format_double(q.pooled) + ',' +
                       format_double(q.histogram) + ',' + format_double(q.gap()) + ',' +
                       (q.within_bin() ? "1" : "0") + '\n';
            }
            write_file_atomic(opts.out, csv);
        } else {
            nlohmann::json cases_json = nlohmann::json::array();
            for (const auto& q : quantiles)
                cases_json.push_back({{"case", q.index},
                                      {"num_clients", q.num_clients},
                                      {"total_points", q.total_points},
                                      {"r_max", q.r_max},
                                      {"bin_width", q.bin_width},
                                      {"pooled", q.pooled},
                                      {"histogram", q.histogram},
                                      {"within_bin", q.within_bin()}});
            nlohmann::json doc{{"quantile_oracle", {{"passed", quantile_pass}, {"cases", cases_json}}},
                               {"full_sharing_equivalence",
                                {{"rounds", eq.rounds}, {"mismatched_rounds", eq.mismatched_rounds}}}};
            write_file_atomic(opts.out, doc.dump(2) + "\n");
        }
    }
    return quantile_pass == quantiles.size() && eq.bit_identical() ? kExitOk : kExitRuntime;
}

void add_common(CLI::App* sub, CommonOptions& opts) {
    sub->add_option("--config", opts.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Override the master seed");
    sub->add_option("--out", opts.out, "Output path");
    sub->add_option("--format", opts.format, "Result format")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Byzantine-resilient federated conformal prediction simulator"};
    app.require_subcommand(1);

    CommonOptions opts;
    std::string histogram_path, trace_path;
    auto* run = app.add_subcommand("run", "Run one experiment configuration");
    add_common(run, opts);
    run->add_option("--histograms", histogram_path, "Also write per-client characterization vectors (CSV)");
    run->add_option("--trace", trace_path, "Also write per-round training error traces (CSV)");

    std::vector<std::string> methods{"fcp", "rob-fcp", "psofed-rob"};
    std::vector<std::string> attacks{"efficiency", "coverage", "random"};
    auto* sweep = app.add_subcommand("sweep", "Cross product of methods and calibration attacks");
    add_common(sweep, opts);
    sweep->add_option("--methods", methods, "Methods to run")->delimiter(',');
    sweep->add_option("--attacks", attacks, "Calibration attacks to run")->delimiter(',');

    std::size_t cases = 100, rounds = 100;
    auto* oracle = app.add_subcommand("oracle", "Histogram-vs-pooled quantile and full-sharing equivalence checks");
    add_common(oracle, opts);
    oracle->add_option("--cases", cases, "Random quantile configurations");
    oracle->add_option("--rounds", rounds, "Rounds for the full-sharing equivalence check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(opts, histogram_path, trace_path);
        if (*sweep) return cmd_sweep(opts, methods, attacks);
        if (*oracle) return cmd_oracle(opts, cases, rounds);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
