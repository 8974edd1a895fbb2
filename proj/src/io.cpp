#include "psfcp/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

namespace psfcp {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ConfigError("config: unknown key '" + where + "." + key + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + where + "." + key + "': " + e.what());
    }
}

void read_range(const json& obj, const char* key, double& lo, double& hi, const std::string& where) {
    if (!obj.contains(key)) return;
    const json& r = obj.at(key);
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
        throw ConfigError("config: '" + where + "." + key + "' must be [lo, hi]");
    lo = r[0].get<double>();
    hi = r[1].get<double>();
}

std::string attack_label(const ExperimentResult& r) { return to_string(r.attack); }

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
    ExperimentConfig cfg;
    reject_unknown(doc, {"training", "data", "attack", "calibration", "experiment"}, "<root>");

    if (doc.contains("training")) {
        const json& t = doc.at("training");
        reject_unknown(t, {"dim", "shared", "step_size", "num_clients", "participants_per_round", "rounds"}, "training");
        read(t, "dim", cfg.training.dim, "training");
        read(t, "shared", cfg.training.shared, "training");
        read(t, "step_size", cfg.training.step_size, "training");
        read(t, "num_clients", cfg.training.num_clients, "training");
        read(t, "participants_per_round", cfg.training.participants_per_round, "training");
        read(t, "rounds", cfg.training.rounds, "training");
    }
    if (doc.contains("data")) {
        const json& d = doc.at("data");
        reject_unknown(d, {"input_variance", "noise_variance", "split"}, "data");
        read_range(d, "input_variance", cfg.data.input_variance_lo, cfg.data.input_variance_hi, "data");
        read_range(d, "noise_variance", cfg.data.noise_variance_lo, cfg.data.noise_variance_hi, "data");
        if (d.contains("split")) {
            const json& s = d.at("split");
            if (!s.is_array() || s.size() != 3) throw ConfigError("config: 'data.split' must be [train, cal, test]");
            try {
                cfg.data.n_train = s[0].get<std::size_t>();
                cfg.data.n_cal = s[1].get<std::size_t>();
                cfg.data.n_test = s[2].get<std::size_t>();
            } catch (const json::exception& e) {
                throw ConfigError(std::string("config: bad value for 'data.split': ") + e.what());
            }
        }
    }
    if (doc.contains("attack")) {
        const json& a = doc.at("attack");
        reject_unknown(a, {"byzantine_count", "placement", "attack_probability", "noise_variance", "calibration",
                           "random_range"},
                       "attack");
        read(a, "byzantine_count", cfg.attack.byzantine_count, "attack");
        read(a, "attack_probability", cfg.attack.attack_probability, "attack");
        read(a, "noise_variance", cfg.attack.noise_variance, "attack");
        std::string placement = "first";
        read(a, "placement", placement, "attack");
        if (placement == "first") cfg.attack.placement = ByzantinePlacement::First;
        else if (placement == "random") cfg.attack.placement = ByzantinePlacement::Random;
        else throw ConfigError("config: 'attack.placement' must be 'first' or 'random'");
        std::string kind = to_string(cfg.attack.calibration.kind);
        read(a, "calibration", kind, "attack");
        try {
            cfg.attack.calibration.kind = parse_calibration_attack(kind);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        read_range(a, "random_range", cfg.attack.calibration.lo, cfg.attack.calibration.hi, "attack");
    }
    if (doc.contains("calibration")) {
        const json& c = doc.at("calibration");
        reject_unknown(c, {"alpha", "bins", "r_max", "selection", "mad_cutoff"}, "calibration");
        read(c, "alpha", cfg.calibration.alpha, "calibration");
        read(c, "bins", cfg.calibration.bins, "calibration");
        read(c, "mad_cutoff", cfg.calibration.mad_cutoff, "calibration");
        std::string selection = "known";
        read(c, "selection", selection, "calibration");
        if (selection == "known") cfg.calibration.selection = SelectionRule::KnownCount;
        else if (selection == "mad") cfg.calibration.selection = SelectionRule::Mad;
        else throw ConfigError("config: 'calibration.selection' must be 'known' or 'mad'");
        if (c.contains("r_max")) {
            const json& r = c.at("r_max");
            auto& norm = cfg.calibration.normalization;
            if (r.is_number()) {
                norm.mode = NormalizationMode::Fixed;
                norm.value = r.get<double>();
            } else {
                reject_unknown(r, {"mode", "multiplier", "value"}, "calibration.r_max");
                std::string mode = to_string(norm.mode);
                read(r, "mode", mode, "calibration.r_max");
                try {
                    norm.mode = parse_normalization_mode(mode);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(std::string("config: ") + e.what());
                }
                read(r, "multiplier", norm.multiplier, "calibration.r_max");
                read(r, "value", norm.value, "calibration.r_max");
            }
        }
    }
    if (doc.contains("experiment")) {
        const json& e = doc.at("experiment");
        reject_unknown(e, {"method", "n_trials", "master_seed", "coverage_includes_byzantine"}, "experiment");
        std::string method = to_string(cfg.method);
        read(e, "method", method, "experiment");
        try {
            cfg.method = parse_method(method);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(std::string("config: ") + ex.what());
        }
        read(e, "n_trials", cfg.n_trials, "experiment");
        read(e, "master_seed", cfg.master_seed, "experiment");
        read(e, "coverage_includes_byzantine", cfg.coverage_includes_byzantine, "experiment");
    }

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    const auto& n = cfg.calibration.normalization;
    return json{
        {"training",
         {{"dim", cfg.training.dim},
          {"shared", cfg.training.shared},
          {"step_size", cfg.training.step_size},
          {"num_clients", cfg.training.num_clients},
          {"participants_per_round", cfg.training.participants_per_round},
          {"rounds", cfg.training.rounds}}},
        {"data",
         {{"input_variance", {cfg.data.input_variance_lo, cfg.data.input_variance_hi}},
          {"noise_variance", {cfg.data.noise_variance_lo, cfg.data.noise_variance_hi}},
          {"split", {cfg.data.n_train, cfg.data.n_cal, cfg.data.n_test}}}},
        {"attack",
         {{"byzantine_count", cfg.attack.byzantine_count},
          {"placement", cfg.attack.placement == ByzantinePlacement::First ? "first" : "random"},
          {"attack_probability", cfg.attack.attack_probability},
          {"noise_variance", cfg.attack.noise_variance},
          {"calibration", to_string(cfg.attack.calibration.kind)},
          {"random_range", {cfg.attack.calibration.lo, cfg.attack.calibration.hi}}}},
        {"calibration",
         {{"alpha", cfg.calibration.alpha},
          {"bins", cfg.calibration.bins},
          {"r_max", {{"mode", to_string(n.mode)}, {"multiplier", n.multiplier}, {"value", n.value}}},
          {"selection", cfg.calibration.selection == SelectionRule::KnownCount ? "known" : "mad"},
          {"mad_cutoff", cfg.calibration.mad_cutoff}}},
        {"experiment",
         {{"method", to_string(cfg.method)},
          {"n_trials", cfg.n_trials},
          {"master_seed", cfg.master_seed},
          {"coverage_includes_byzantine", cfg.coverage_includes_byzantine}}},
    };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

ResultFormat parse_result_format(std::string_view name) {
    if (name == "csv") return ResultFormat::Csv;
    if (name == "json") return ResultFormat::Json;
    throw ConfigError("unknown format '" + std::string(name) + "' (expected csv or json)");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::vector<std::string>& result_csv_columns() {
    static const std::vector<std::string> cols{"trial",     "method", "attack",
                                               "coverage",  "mean_width", "final_mse",
                                               "q_hat",     "n_detected_true_benign", "n_detected_false_benign"};
    return cols;
}

std::string results_to_csv(const std::vector<ExperimentResult>& results) {
    std::ostringstream out;
    const auto& cols = result_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : results) {
        for (const auto& t : r.trials) {
            out << t.trial << ',' << to_string(t.method) << ',' << to_string(t.attack) << ','
                << format_double(t.coverage) << ',' << format_double(t.mean_width) << ','
                << format_double(t.final_mse) << ',' << format_double(t.q_hat) << ','
                << t.n_detected_true_benign << ',' << t.n_detected_false_benign << '\n';
        }
    }
    return out.str();
}

namespace {

json summary_json(const MetricSummary& s) { return json{{"mean", s.mean}, {"std", s.stddev}}; }

MetricSummary summary_from_json(const json& j) { return MetricSummary{j.at("mean").get<double>(), j.at("std").get<double>()}; }

}  // namespace

json results_to_json(const std::vector<ExperimentResult>& results) {
    json experiments = json::array();
    for (const auto& r : results) {
        json trials = json::array();
        for (const auto& t : r.trials) {
            trials.push_back({{"trial", t.trial},
                              {"method", to_string(t.method)},
                              {"attack", to_string(t.attack)},
                              {"coverage", t.coverage},
                              {"mean_width", t.mean_width},
                              {"final_mse", t.final_mse},
                              {"q_hat", t.q_hat},
                              {"r_max", t.r_max},
                              {"num_clients", t.num_clients},
                              {"n_detected_true_benign", t.n_detected_true_benign},
                              {"n_detected_false_benign", t.n_detected_false_benign},
                              {"byzantine", t.byzantine},
                              {"detected_benign", t.detected_benign}});
        }
        experiments.push_back({{"method", to_string(r.method)},
                               {"attack", attack_label(r)},
                               {"master_seed", r.master_seed},
                               {"trials", std::move(trials)},
                               {"aggregate",
                                {{"coverage", summary_json(r.coverage)},
                                 {"mean_width", summary_json(r.mean_width)},
                                 {"final_mse", summary_json(r.final_mse)},
                                 {"q_hat", summary_json(r.q_hat)}}}});
    }
    return json{{"schema", "psfcp.results/1"}, {"experiments", std::move(experiments)}};
}

std::vector<ExperimentResult> results_from_json(const json& doc) {
    std::vector<ExperimentResult> out;
    try {
        for (const json& e : doc.at("experiments")) {
            ExperimentResult r;
            r.method = parse_method(e.at("method").get<std::string>());
            r.attack = parse_calibration_attack(e.at("attack").get<std::string>());
            r.master_seed = e.at("master_seed").get<std::uint64_t>();
            for (const json& t : e.at("trials")) {
                TrialRecord rec;
                rec.trial = t.at("trial").get<std::size_t>();
                rec.method = parse_method(t.at("method").get<std::string>());
                rec.attack = parse_calibration_attack(t.at("attack").get<std::string>());
                rec.coverage = t.at("coverage").get<double>();
                rec.mean_width = t.at("mean_width").get<double>();
                rec.final_mse = t.at("final_mse").get<double>();
                rec.q_hat = t.at("q_hat").get<double>();
                rec.r_max = t.at("r_max").get<double>();
                rec.num_clients = t.at("num_clients").get<std::size_t>();
                rec.n_detected_true_benign = t.at("n_detected_true_benign").get<std::size_t>();
                rec.n_detected_false_benign = t.at("n_detected_false_benign").get<std::size_t>();
                rec.byzantine = t.at("byzantine").get<std::vector<ClientId>>();
                rec.detected_benign = t.at("detected_benign").get<std::vector<ClientId>>();
                r.trials.push_back(std::move(rec));
            }
            const json& agg = e.at("aggregate");
            r.coverage = summary_from_json(agg.at("coverage"));
            r.mean_width = summary_from_json(agg.at("mean_width"));
            r.final_mse = summary_from_json(agg.at("final_mse"));
            r.q_hat = summary_from_json(agg.at("q_hat"));
            out.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("results_from_json: ") + e.what());
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move results into " + path.string());
    }
}

void emit_results(const std::vector<ExperimentResult>& results, const std::filesystem::path& path,
                  ResultFormat format) {
    if (format == ResultFormat::Csv) write_file_atomic(path, results_to_csv(results));
    else write_file_atomic(path, results_to_json(results).dump(2) + "\n");
}

std::string plotdata_to_csv(const std::vector<ExperimentResult>& results) {
    std::ostringstream out;
    out << "trial,method,attack,metric,value\n";
    for (const auto& r : results) {
        for (const auto& t : r.trials) {
            const std::string prefix = std::to_string(t.trial) + ',' + to_string(t.method) + ',' + to_string(t.attack) + ',';
            out << prefix << "coverage," << format_double(t.coverage) << '\n';
            out << prefix << "mean_width," << format_double(t.mean_width) << '\n';
            out << prefix << "final_mse," << format_double(t.final_mse) << '\n';
        }
    }
    return out.str();
}

void emit_plotdata(const std::vector<ExperimentResult>& results, const std::filesystem::path& path) {
    if (results.empty()) throw std::invalid_argument("emit_plotdata: no results");
    write_file_atomic(path, plotdata_to_csv(results));
}

std::string histograms_to_csv(const std::vector<ExperimentResult>& results) {
    std::size_t bins = 0;
    for (const auto& r : results)
        for (const auto& t : r.trials)
            if (!t.histograms.empty()) bins = t.histograms.front().v.size();
    std::ostringstream out;
    out << "trial,method,attack,client,role,n_points";
    for (std::size_t h = 1; h <= bins; ++h) out << ",v" << h;
    out << '\n';
    for (const auto& r : results) {
        for (const auto& t : r.trials) {
            for (const auto& cv : t.histograms) {
                const bool byz = std::binary_search(t.byzantine.begin(), t.byzantine.end(), cv.owner);
                out << t.trial << ',' << to_string(t.method) << ',' << to_string(t.attack) << ',' << cv.owner << ','
                    << (byz ? "byzantine" : "benign") << ',' << cv.n_points;
                for (double v : cv.v) out << ',' << format_double(v);
                out << '\n';
            }
        }
    }
    return out.str();
}

void emit_histograms(const std::vector<ExperimentResult>& results, const std::filesystem::path& path) {
    write_file_atomic(path, histograms_to_csv(results));
}

std::string traces_to_csv(const std::vector<ExperimentResult>& results) {
    std::ostringstream out;
    out << "method,attack,trial,round,mse\n";
    for (const auto& r : results)
        for (const auto& t : r.trials)
            for (std::size_t n = 0; n < t.mse_trace.size(); ++n)
                out << to_string(t.method) << ',' << to_string(t.attack) << ',' << t.trial << ',' << n + 1 << ','
                    << format_double(t.mse_trace[n]) << '\n';
    return out.str();
}

json to_json(const CharacterizationVector& cv) {
    return json{{"client", cv.owner}, {"n_points", cv.n_points}, {"v", cv.v}};
}

CharacterizationVector characterization_from_json(const json& j) {
    try {
        return CharacterizationVector{j.at("client").get<ClientId>(), j.at("v").get<std::vector<double>>(),
                                      j.at("n_points").get<std::size_t>()};
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("characterization_from_json: ") + e.what());
    }
}

}  // namespace psfcp
