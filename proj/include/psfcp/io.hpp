#pragma once

// Config ingestion and result persistence. All writers go through a temp
// file in the destination directory followed by a rename.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "psfcp/experiment.hpp"

namespace psfcp {

/// Malformed or inconsistent configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem failure, message carries the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses and validates a config document. Missing keys keep their defaults;
/// unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

enum class ResultFormat { Csv, Json };
ResultFormat parse_result_format(std::string_view name);

/// Column order of the per-trial CSV.
const std::vector<std::string>& result_csv_columns();

std::string results_to_csv(const std::vector<ExperimentResult>& results);
nlohmann::json results_to_json(const std::vector<ExperimentResult>& results);

/// Inverse of results_to_json for the persisted fields.
std::vector<ExperimentResult> results_from_json(const nlohmann::json& doc);

void emit_results(const std::vector<ExperimentResult>& results, const std::filesystem::path& path,
                  ResultFormat format);

/// Long format: trial,method,attack,metric,value with metrics coverage,
/// mean_width and final_mse.
std::string plotdata_to_csv(const std::vector<ExperimentResult>& results);
void emit_plotdata(const std::vector<ExperimentResult>& results, const std::filesystem::path& path);

/// One row per client histogram: trial,method,attack,client,role,n_points,v1..vH.
/// Only trials that kept their histograms contribute rows.
std::string histograms_to_csv(const std::vector<ExperimentResult>& results);
void emit_histograms(const std::vector<ExperimentResult>& results, const std::filesystem::path& path);

/// method,attack,trial,round,mse for trials that kept their trace.
std::string traces_to_csv(const std::vector<ExperimentResult>& results);

nlohmann::json to_json(const CharacterizationVector& cv);
CharacterizationVector characterization_from_json(const nlohmann::json& j);

/// Writes `content` to `path` atomically.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// %.17g, round-trips through strtod.
std::string format_double(double v);

}  // namespace psfcp
