#include <jpac/harness.hpp>
#include <jpac/deflation.hpp>
#include <jpac/rng.hpp>
#include <jpac/serialization.hpp>
#include <jpac/timescale.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace jpac {

using nlohmann::json;

namespace {

enum Purpose : int
{
    kInstance = 1,
    kSamples = 2,
    kValidation = 3,
    kPerfectCsi = 4,
};

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
    return os;
}

void check_written(std::ofstream& os, const std::filesystem::path& p)
{
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + p.string());
}

const char* step_rule_name(StepRule r) { return r == StepRule::fixed ? "fixed" : "backtracking"; }

double elapsed(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

/// All configured algorithms on one (K, run) pair, sharing instance, samples and validation draws.
std::vector<RunRecord> run_one(const ExperimentConfig& cfg, int K, int run)
{
    std::vector<RunRecord> out;
    GeometryConfig geometry = cfg.geometry;
    geometry.kappa = cfg.kappa;

    NetworkInstance inst;
    GainSampleSet samples;
    std::string setup_error;
    try {
        inst = generate_instance(K, derive_seed(cfg.seed, K, run, kInstance), geometry);
        samples = sample_gains(inst, cfg.sample_count(), derive_seed(cfg.seed, K, run, kSamples));
    } catch (const std::exception& e) {
        setup_error = e.what();
    }
    const auto validation_seed = derive_seed(cfg.seed, K, run, kValidation);

    for (const auto alg : cfg.algorithms) {
        RunRecord rec;
        rec.K = K;
        rec.run = run;
        rec.algorithm = alg;
        const auto start = std::chrono::steady_clock::now();
        try {
            if (!setup_error.empty()) throw std::runtime_error(setup_error);
            switch (alg) {
            case Algorithm::adaptive: {
                const auto outcome = admission_control(inst, samples, cfg.c, cfg.solver);
                const auto rep = run_two_timescale(inst, outcome.supported, cfg.validation_draws, validation_seed);
                rec.supported = static_cast<double>(outcome.supported.size());
                rec.total_power = rep.avg_total_power;
                rec.outage_ratio = rep.outage_ratio;
                rec.detector_disagreements = rep.detector_disagreements;
                break;
            }
            case Algorithm::constant_power: {
                const auto outcome = admission_control_constant_power(inst, samples, cfg.c, cfg.solver);
                const Eigen::VectorXd p = outcome.supported.empty()
                                              ? Eigen::VectorXd()
                                              : Eigen::VectorXd(outcome.per_sample_pmin.row(0).transpose());
                const auto rep =
                    run_constant_power(inst, outcome.supported, p, cfg.validation_draws, validation_seed);
                rec.supported = static_cast<double>(outcome.supported.size());
                rec.total_power = rep.avg_total_power;
                rec.outage_ratio = rep.outage_ratio;
                break;
            }
            case Algorithm::perfect_csi: {
                const auto draws = sample_gains(inst, cfg.perfect_csi_realizations,
                                                derive_seed(cfg.seed, K, run, kPerfectCsi));
                double supported = 0.0, power = 0.0;
                for (const auto& g : draws.gains) {
                    const auto outcome = perfect_csi_benchmark(inst, g, cfg.c, cfg.solver);
                    supported += static_cast<double>(outcome.supported.size());
                    if (!outcome.supported.empty()) power += outcome.per_sample_pmin.row(0).sum();
                }
                rec.supported = supported / draws.N;
                rec.total_power = power / draws.N;
                break;
            }
            }
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        out.push_back(rec);
        out.back().wall_time = elapsed(start);
    }
    return out;
}

} // namespace

const char* to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::adaptive: return "adaptive";
    case Algorithm::constant_power: return "constant_power";
    case Algorithm::perfect_csi: return "perfect_csi";
    }
    return "?";
}

Algorithm algorithm_from_string(const std::string& name)
{
    if (name == "adaptive") return Algorithm::adaptive;
    if (name == "constant_power") return Algorithm::constant_power;
    if (name == "perfect_csi") return Algorithm::perfect_csi;
    throw ConfigError("unknown algorithm '" + name + "'");
}

void ExperimentConfig::validate() const
{
    if (K_list.empty()) throw ConfigError("K_list must be nonempty");
    for (int K : K_list)
        if (K < 1) throw ConfigError("every K must be positive");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (!(eps > 0 && eps < 1)) throw ConfigError("eps must lie in (0, 1)");
    if (!(delta > 0 && delta < 1)) throw ConfigError("delta must lie in (0, 1)");
    if (!(c > 0 && c < 1)) throw ConfigError("c must lie in (0, 1)");
    if (!(kappa >= 0)) throw ConfigError("kappa must be nonnegative");
    if (N_override && *N_override < 1) throw ConfigError("N_override must be >= 1");
    if (validation_draws < 1) throw ConfigError("validation_draws must be >= 1");
    if (algorithms.empty()) throw ConfigError("algorithms must be nonempty");
    if (perfect_csi_realizations < 1) throw ConfigError("perfect_csi_realizations must be >= 1");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    try {
        solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

int ExperimentConfig::sample_count() const
{
    return N_override ? *N_override : sample_size_adaptive_power(eps, delta);
}

void apply_config_json(ExperimentConfig& cfg, const json& doc)
{
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "K_list") cfg.K_list = value.get<std::vector<int>>();
            else if (key == "runs") cfg.runs = value.get<int>();
            else if (key == "eps") cfg.eps = value.get<double>();
            else if (key == "delta") cfg.delta = value.get<double>();
            else if (key == "c") cfg.c = value.get<double>();
            else if (key == "kappa") cfg.kappa = value.is_string() && value.get<std::string>() == "inf"
                                                     ? std::numeric_limits<double>::infinity()
                                                     : value.get<double>();
            else if (key == "N_override") {
                if (value.is_null()) cfg.N_override.reset();
                else cfg.N_override = value.get<int>();
            }
            else if (key == "validation_draws") cfg.validation_draws = value.get<int>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "algorithms") {
                cfg.algorithms.clear();
                for (const auto& a : value) cfg.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
            }
            else if (key == "output_dir") cfg.output_dir = value.get<std::string>();
            else if (key == "perfect_csi_realizations") cfg.perfect_csi_realizations = value.get<int>();
            else if (key == "threads") cfg.threads = value.get<int>();
            else if (key == "record_wall_time") cfg.record_wall_time = value.get<bool>();
            else if (key == "geometry") {
                auto& g = cfg.geometry;
                for (const auto& [gk, gv] : value.items()) {
                    if (gk == "square_side_km") g.square_side_km = gv.get<double>();
                    else if (gk == "rx_min_radius_m") g.rx_min_radius_m = gv.get<double>();
                    else if (gk == "rx_max_radius_m") g.rx_max_radius_m = gv.get<double>();
                    else if (gk == "gamma_db") g.gamma_db = gv.get<double>();
                    else if (gk == "eta_db") g.eta_db = gv.get<double>();
                    else if (gk == "budget_factor") g.budget_factor = gv.get<double>();
                    else throw ConfigError("unknown geometry key '" + gk + "'");
                }
            }
            else if (key == "solver") {
                auto& s = cfg.solver;
                for (const auto& [sk, sv] : value.items()) {
                    if (sk == "max_iters") s.max_iters = sv.get<int>();
                    else if (sk == "tol_rel_obj") s.tol_rel_obj = sv.get<double>();
                    else if (sk == "tol_infeas") s.tol_infeas = sv.get<double>();
                    else if (sk == "smoothing_mu") s.smoothing_mu = sv.get<double>();
                    else if (sk == "mu_start") s.mu_start = sv.get<double>();
                    else if (sk == "step_rule") {
                        const auto r = sv.get<std::string>();
                        if (r == "fixed") s.step_rule = StepRule::fixed;
                        else if (r == "backtracking") s.step_rule = StepRule::backtracking;
                        else throw ConfigError("unknown step_rule '" + r + "'");
                    }
                    else throw ConfigError("unknown solver key '" + sk + "'");
                }
            }
            else throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

json config_to_json(const ExperimentConfig& cfg)
{
    json algs = json::array();
    for (auto a : cfg.algorithms) algs.push_back(to_string(a));
    return json{
        {"K_list", cfg.K_list},
        {"runs", cfg.runs},
        {"eps", cfg.eps},
        {"delta", cfg.delta},
        {"c", cfg.c},
        {"kappa", std::isinf(cfg.kappa) ? json("inf") : json(cfg.kappa)},
        {"N_override", cfg.N_override ? json(*cfg.N_override) : json(nullptr)},
        {"validation_draws", cfg.validation_draws},
        {"seed", cfg.seed},
        {"algorithms", algs},
        {"output_dir", cfg.output_dir},
        {"perfect_csi_realizations", cfg.perfect_csi_realizations},
        {"threads", cfg.threads},
        {"record_wall_time", cfg.record_wall_time},
        {"geometry",
         {{"square_side_km", cfg.geometry.square_side_km},
          {"rx_min_radius_m", cfg.geometry.rx_min_radius_m},
          {"rx_max_radius_m", cfg.geometry.rx_max_radius_m},
          {"gamma_db", cfg.geometry.gamma_db},
          {"eta_db", cfg.geometry.eta_db},
          {"budget_factor", cfg.geometry.budget_factor}}},
        {"solver",
         {{"max_iters", cfg.solver.max_iters},
          {"tol_rel_obj", cfg.solver.tol_rel_obj},
          {"tol_infeas", cfg.solver.tol_infeas},
          {"smoothing_mu", cfg.solver.smoothing_mu},
          {"mu_start", cfg.solver.mu_start},
          {"step_rule", step_rule_name(cfg.solver.step_rule)}}},
    };
}

std::uint64_t derive_seed(std::uint64_t master, int K, int run, int purpose)
{
    return RandomStream(master, {static_cast<std::uint64_t>(K), static_cast<std::uint64_t>(run),
                                 static_cast<std::uint64_t>(purpose)})
        .key();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();

    std::vector<std::pair<int, int>> tasks;
    for (int K : cfg.K_list)
        for (int r = 0; r < cfg.runs; ++r) tasks.emplace_back(K, r);
    std::vector<std::vector<RunRecord>> results(tasks.size());

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const auto workers = static_cast<std::size_t>(cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : hw);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++)
            results[i] = run_one(cfg, tasks[i].first, tasks[i].second);
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < std::min(workers, tasks.size()); ++w) pool.emplace_back(work);
        work();
    }

    ExperimentResult out;
    for (auto& batch : results)
        for (auto& rec : batch) {
            if (!rec.ok) {
                ++out.failed_runs;
                std::cerr << "run failed: K=" << rec.K << " run=" << rec.run << " algorithm=" << to_string(rec.algorithm)
                          << ": " << rec.error << '\n';
            }
            out.records.push_back(std::move(rec));
        }
    out.rows = aggregate(cfg, out.records);
    return out;
}

std::vector<MetricsRow> aggregate(const ExperimentConfig& cfg, const std::vector<RunRecord>& records)
{
    std::vector<MetricsRow> rows;
    for (int K : cfg.K_list)
        for (auto alg : cfg.algorithms) {
            MetricsRow row;
            row.K = K;
            row.algorithm = to_string(alg);
            for (const auto& r : records) {
                if (r.K != K || r.algorithm != alg || !r.ok) continue;
                ++row.runs;
                row.avg_supported += r.supported;
                row.avg_total_power += r.total_power;
                row.max_outage = std::max(row.max_outage, r.outage_ratio);
                row.wall_time += r.wall_time;
            }
            if (row.runs > 0) {
                row.avg_supported /= row.runs;
                row.avg_total_power /= row.runs;
            }
            if (!cfg.record_wall_time) row.wall_time = 0.0;
            rows.push_back(row);
        }
    return rows;
}

void emit_outputs(const ExperimentResult& result, const ExperimentConfig& cfg, const std::string& output_dir)
{
    if (result.rows.empty()) throw std::invalid_argument("emit_outputs: no rows");
    namespace fs = std::filesystem;
    const fs::path dir(output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    {
        const auto p = dir / "metrics.csv";
        auto os = open_out(p);
        os << kMetricsHeader << '\n';
        for (const auto& r : result.rows)
            os << r.K << ',' << r.algorithm << ',' << num(r.avg_supported) << ',' << num(r.avg_total_power) << ','
               << num(r.max_outage) << ',' << r.runs << ',' << num(r.wall_time) << '\n';
        check_written(os, p);
    }

    auto figure = [&](const char* name, auto field) {
        const auto p = dir / name;
        auto os = open_out(p);
        os << 'K';
        for (auto a : cfg.algorithms) os << ',' << to_string(a);
        os << '\n';
        for (int K : cfg.K_list) {
            os << K;
            for (auto a : cfg.algorithms) {
                const auto it = std::find_if(result.rows.begin(), result.rows.end(), [&](const MetricsRow& r) {
                    return r.K == K && r.algorithm == to_string(a);
                });
                os << ',' << (it == result.rows.end() ? std::string() : num(field(*it)));
            }
            os << '\n';
        }
        check_written(os, p);
    };
    figure("fig_supported.csv", [](const MetricsRow& r) { return r.avg_supported; });
    figure("fig_power.csv", [](const MetricsRow& r) { return r.avg_total_power; });

    {
        const auto p = dir / "runs.csv";
        auto os = open_out(p);
        os << "K,run,algorithm,ok,supported,total_power,outage_ratio,detector_disagreements\n";
        for (const auto& r : result.records)
            os << r.K << ',' << r.run << ',' << to_string(r.algorithm) << ',' << (r.ok ? 1 : 0) << ','
               << num(r.supported) << ',' << num(r.total_power) << ',' << num(r.outage_ratio) << ','
               << r.detector_disagreements << '\n';
        check_written(os, p);
    }

    json failures = json::array();
    json timing = json::array();
    for (const auto& r : result.records) {
        if (!r.ok) failures.push_back({{"K", r.K}, {"run", r.run}, {"algorithm", to_string(r.algorithm)}, {"error", r.error}});
        timing.push_back({{"K", r.K}, {"run", r.run}, {"algorithm", to_string(r.algorithm)}, {"wall_time", r.wall_time}});
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    json manifest{
        {"format", kFormatVersion},
        {"kind", "experiment_manifest"},
        {"config", config_to_json(cfg)},
        {"seed", cfg.seed},
        {"seed_rule", "per-run seed = Philox key of (seed, K, run, purpose); purposes 1 instance, 2 samples, "
                      "3 validation draws, 4 perfect-CSI realizations"},
        {"sample_count", cfg.sample_count()},
        {"power_definition",
         "adaptive: mean over non-outage validation draws of the summed FM powers of supported links; "
         "constant_power: summed constant powers over non-outage draws; perfect_csi: mean summed minimal power "
         "over its realizations"},
        {"versions", {{"jpac", "1.0.0"}, {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                       std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                       std::to_string(EIGEN_MINOR_VERSION)}}},
        {"written_at", stamp},
        {"failed_runs", result.failed_runs},
        {"failures", failures},
        {"timing", timing},
        {"files", {"metrics.csv", "fig_supported.csv", "fig_power.csv", "runs.csv"}},
    };
    write_json_file(manifest, (dir / "manifest.json").string());
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != kMetricsHeader) throw std::runtime_error(path + ": unexpected header");
    std::vector<MetricsRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[7];
        for (auto& field : f)
            if (!std::getline(ss, field, ',')) throw std::runtime_error(path + ": short row");
        MetricsRow r;
        r.K = std::stoi(f[0]);
        r.algorithm = f[1];
        r.avg_supported = std::stod(f[2]);
        r.avg_total_power = std::stod(f[3]);
        r.max_outage = std::stod(f[4]);
        r.runs = std::stoi(f[5]);
        r.wall_time = std::stod(f[6]);
        rows.push_back(r);
    }
    return rows;
}

} // namespace jpac
