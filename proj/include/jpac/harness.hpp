#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <jpac/cvxsolver.hpp>
#include <jpac/netmodel.hpp>

namespace jpac {

enum class Algorithm
{
    adaptive,
    constant_power,
    perfect_csi,
};

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

/// Invalid experiment configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig
{
    std::vector<int> K_list{4, 6, 8, 10, 12};
    int runs = 50;
    double eps = 0.05;
    double delta = 0.01;
    double c = 0.999;
    double kappa = 100.0;
    std::optional<int> N_override;
    int validation_draws = 2000;
    std::uint64_t seed = 1;
    std::vector<Algorithm> algorithms{Algorithm::adaptive, Algorithm::constant_power, Algorithm::perfect_csi};
    std::string output_dir = "results";
    int perfect_csi_realizations = 10;  ///< realizations per run for the perfect-CSI proxy
    int threads = 0;                    ///< 0: hardware concurrency
    bool record_wall_time = false;      ///< false writes 0 so metrics.csv is reproducible byte for byte
    GeometryConfig geometry;
    SolverConfig solver;

    void validate() const;
    int sample_count() const;
};

/// Overlays the keys present in `doc` onto `cfg`. Unknown keys are a ConfigError.
void apply_config_json(ExperimentConfig& cfg, const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Per-run seed for a purpose tag: a child stream key of (seed, K, run, purpose).
std::uint64_t derive_seed(std::uint64_t master, int K, int run, int purpose);

struct RunRecord
{
    int K = 0;
    int run = 0;
    Algorithm algorithm = Algorithm::adaptive;
    bool ok = true;
    std::string error;
    double supported = 0.0;  ///< mean over realizations for perfect_csi
    double total_power = 0.0;
    double outage_ratio = 0.0;
    int detector_disagreements = 0;
    double wall_time = 0.0;
};

struct MetricsRow
{
    int K = 0;
    std::string algorithm;
    double avg_supported = 0.0;
    double avg_total_power = 0.0;
    double max_outage = 0.0;
    int runs = 0;
    double wall_time = 0.0;

    bool operator==(const MetricsRow&) const = default;
};

struct ExperimentResult
{
    std::vector<MetricsRow> rows;
    std::vector<RunRecord> records;
    int failed_runs = 0;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Averages successful run records into one row per (K, algorithm).
std::vector<MetricsRow> aggregate(const ExperimentConfig& cfg, const std::vector<RunRecord>& records);

inline constexpr const char* kMetricsHeader = "K,algorithm,avg_supported,avg_total_power,max_outage,runs,wall_time";

/// Writes metrics.csv, fig_supported.csv, fig_power.csv, runs.csv and manifest.json.
void emit_outputs(const ExperimentResult& result, const ExperimentConfig& cfg, const std::string& output_dir);

std::vector<MetricsRow> read_metrics_csv(const std::string& path);

} // namespace jpac
