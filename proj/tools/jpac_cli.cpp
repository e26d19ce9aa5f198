#include <algorithm>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <jpac/cvxsolver.hpp>
#include <jpac/deflation.hpp>
#include <jpac/harness.hpp>
#include <jpac/serialization.hpp>
#include <jpac/timescale.hpp>

using namespace jpac;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void emit(const json& doc, const std::string& out)
{
    if (out.empty() || out == "-") std::cout << doc.dump(2) << '\n';
    else write_json_file(doc, out);
}

struct GenerateArgs
{
    int K = 4;
    std::uint64_t seed = 1;
    std::optional<int> N;
    double eps = 0.05, delta = 0.01;
    std::optional<double> kappa;
    std::optional<double> side_km;
    std::string instance_out = "instance.json";
    std::string samples_out;
};

int cmd_generate(const GenerateArgs& a)
{
    GeometryConfig geo;
    if (a.kappa) geo.kappa = *a.kappa;
    if (a.side_km) geo.square_side_km = *a.side_km;
    const auto inst = generate_instance(a.K, derive_seed(a.seed, a.K, 0, 1), geo);
    write_json_file(to_json(inst), a.instance_out);
    if (!a.samples_out.empty()) {
        const int N = a.N ? *a.N : sample_size_adaptive_power(a.eps, a.delta);
        write_json_file(to_json(sample_gains(inst, N, derive_seed(a.seed, a.K, 0, 2))), a.samples_out);
    }
    return 0;
}

struct SolveArgs
{
    std::string instance, samples, out, trace;
    std::string algorithm = "adaptive";
    double c = 0.999;
    bool normalized_noise = false;
};

int cmd_solve(const SolveArgs& a)
{
    const auto inst = instance_from_json(read_json_file(a.instance));
    const auto samples = samples_from_json(read_json_file(a.samples));
    if (samples.K() != inst.K) throw ConfigError("samples do not match the instance size");
    SolverConfig cfg;
    if (!a.trace.empty()) cfg.trace_path = a.trace;
    DeflationOptions opts;
    if (a.normalized_noise) opts.noise = NoiseTerm::normalized;

    AdmissionOutcome out;
    switch (algorithm_from_string(a.algorithm)) {
    case Algorithm::adaptive: out = admission_control(inst, samples, a.c, cfg, opts); break;
    case Algorithm::constant_power: out = admission_control_constant_power(inst, samples, a.c, cfg, opts); break;
    case Algorithm::perfect_csi:
        if (samples.N != 1) throw ConfigError("perfect_csi expects a single gain realization");
        out = perfect_csi_benchmark(inst, samples.gains[0], a.c, cfg, opts);
        break;
    }
    // The trace holds the last solve; admission without any solve leaves a header-only file.
    if (!a.trace.empty() && out.solver_stats.solves == 0) write_trace_csv({}, a.trace);
    emit(to_json(out), a.out);
    return 0;
}

struct BenchmarkArgs
{
    std::string config;
    std::vector<int> K_list;
    std::optional<int> runs, N_override, validation_draws, perfect_csi_realizations, threads;
    std::optional<double> eps, delta, c, kappa;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> algorithms;
    std::optional<std::string> output_dir;
    bool record_wall_time = false;
};

int cmd_benchmark(const BenchmarkArgs& a)
{
    ExperimentConfig cfg;
    if (!a.config.empty()) apply_config_json(cfg, read_json_file(a.config));
    if (!a.K_list.empty()) cfg.K_list = a.K_list;
    if (a.runs) cfg.runs = *a.runs;
    if (a.N_override) cfg.N_override = *a.N_override;
    if (a.validation_draws) cfg.validation_draws = *a.validation_draws;
    if (a.perfect_csi_realizations) cfg.perfect_csi_realizations = *a.perfect_csi_realizations;
    if (a.threads) cfg.threads = *a.threads;
    if (a.eps) cfg.eps = *a.eps;
    if (a.delta) cfg.delta = *a.delta;
    if (a.c) cfg.c = *a.c;
    if (a.kappa) cfg.kappa = *a.kappa;
    if (a.seed) cfg.seed = *a.seed;
    if (!a.algorithms.empty()) {
        cfg.algorithms.clear();
        for (const auto& s : a.algorithms) cfg.algorithms.push_back(algorithm_from_string(s));
    }
    if (a.output_dir) cfg.output_dir = *a.output_dir;
    if (a.record_wall_time) cfg.record_wall_time = true;
    cfg.validate();

    const auto result = run_experiment(cfg);
    emit_outputs(result, cfg, cfg.output_dir);
    std::cerr << "wrote " << cfg.output_dir << "/metrics.csv (" << result.rows.size() << " rows, "
              << result.failed_runs << " failed runs)\n";
    return 0;
}

struct ValidateArgs
{
    std::string instance, out, trials_csv;
    std::vector<int> supported;
    int draws = 2000;
    std::uint64_t seed = 1;
};

int cmd_validate(const ValidateArgs& a)
{
    const auto inst = instance_from_json(read_json_file(a.instance));
    LinkSet s = a.supported;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ConfigError("duplicate link in --supported");
    for (int k : s)
        if (k < 0 || k >= inst.K) throw ConfigError("link index out of range in --supported");
    const auto rep = run_two_timescale(inst, s, a.draws, a.seed);
    if (!a.trials_csv.empty()) write_trials_csv(rep, a.trials_csv);
    emit(to_json(rep), a.out);
    return 0;
}

struct OracleArgs
{
    int count = 20;
    int K = 2;
    int N = 2;
    int budget = 20000;
    std::uint64_t seed = 1;
    std::optional<double> side_km;
    std::string out;
};

int cmd_oracle(const OracleArgs& a)
{
    if (a.count < 1 || a.K < 1 || a.N < 1 || a.budget < 1) throw ConfigError("oracle: counts must be positive");
    GeometryConfig geo;
    if (a.side_km) geo.square_side_km = *a.side_km;
    json cases = json::array();
    double worst_gap = 0.0, worst_bound = 0.0;
    int oversized = 0, optimal = 0;
    for (int i = 0; i < a.count; ++i) {
        const auto inst = generate_instance(a.K, derive_seed(a.seed, a.K, i, 1), geo);
        const auto samples = sample_gains(inst, a.N, derive_seed(a.seed, a.K, i, 2));
        const auto prob = normalize(inst, samples, 0.999);
        const auto res = solve_group_norm(prob);
        const auto cert = certify(prob, res, a.budget, a.seed + static_cast<std::uint64_t>(i));
        const auto out = admission_control(inst, samples, 0.999);
        const int best = inst.K <= 20 ? max_admissible_size(inst, samples) : -1;
        const int got = static_cast<int>(out.supported.size());
        worst_gap = std::max(worst_gap, cert.gap / std::max(1.0, std::abs(cert.oracle_objective)));
        worst_bound = std::min(worst_bound, cert.lower_bound_gap);
        oversized += best >= 0 && got > best;
        optimal += got == best;
        cases.push_back({{"objective", res.objective},
                         {"oracle_objective", cert.oracle_objective},
                         {"lower_bound", cert.lower_bound},
                         {"admitted", got},
                         {"exhaustive_max", best}});
    }
    const bool ok = worst_gap <= 1e-4 && worst_bound >= -1e-9 && oversized == 0;
    emit({{"cases", cases},
          {"worst_relative_gap", worst_gap},
          {"worst_lower_bound_gap", worst_bound},
          {"deflation_optimal", optimal},
          {"deflation_oversized", oversized},
          {"ok", ok}},
         a.out);
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Chance-constrained joint power and admission control"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kFormatVersion));

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Write a random instance and optional gain samples");
    g->add_option("--K", gen.K, "Number of links")->check(CLI::PositiveNumber);
    g->add_option("--seed", gen.seed, "Master seed");
    g->add_option("--N", gen.N, "Sample count (default: adaptive-power sample size)")->check(CLI::PositiveNumber);
    g->add_option("--eps", gen.eps, "Outage level for the default sample size");
    g->add_option("--delta", gen.delta, "Confidence level for the default sample size");
    g->add_option("--kappa", gen.kappa, "Rician factor");
    g->add_option("--side-km", gen.side_km, "Side of the transmitter square in km");
    g->add_option("--instance", gen.instance_out, "Instance output path");
    g->add_option("--samples", gen.samples_out, "Sample output path (omit to skip)");

    SolveArgs sol;
    auto* s = app.add_subcommand("solve", "Run admission control on one instance");
    s->add_option("--instance", sol.instance, "Instance JSON")->required();
    s->add_option("--samples", sol.samples, "Gain sample JSON")->required();
    s->add_option("--algorithm", sol.algorithm, "adaptive, constant_power or perfect_csi");
    s->add_option("--c", sol.c, "Fraction of the critical power weight");
    s->add_flag("--normalized-noise", sol.normalized_noise, "Use the normalized noise term in the removal score");
    s->add_option("--trace", sol.trace, "Solver trace CSV");
    s->add_option("--out", sol.out, "Outcome JSON (default stdout)");

    BenchmarkArgs bm;
    auto* b = app.add_subcommand("benchmark", "Monte-Carlo experiment; CLI flags override the config file");
    b->add_option("--config", bm.config, "JSON config file");
    b->add_option("--K_list", bm.K_list, "Link counts");
    b->add_option("--runs", bm.runs, "Runs per K");
    b->add_option("--eps", bm.eps);
    b->add_option("--delta", bm.delta);
    b->add_option("--c", bm.c);
    b->add_option("--kappa", bm.kappa);
    b->add_option("--N_override", bm.N_override, "Sample count instead of the formula");
    b->add_option("--validation_draws", bm.validation_draws);
    b->add_option("--seed", bm.seed);
    b->add_option("--algorithms", bm.algorithms, "Subset of adaptive, constant_power, perfect_csi");
    b->add_option("--output_dir", bm.output_dir);
    b->add_option("--perfect_csi_realizations", bm.perfect_csi_realizations);
    b->add_option("--threads", bm.threads, "Worker threads (0: all cores)");
    b->add_flag("--record_wall_time", bm.record_wall_time, "Write measured wall time into metrics.csv");

    ValidateArgs val;
    auto* v = app.add_subcommand("validate", "Outage check of an admitted set on fresh draws");
    v->add_option("--instance", val.instance, "Instance JSON")->required();
    v->add_option("--supported", val.supported, "Admitted link indices")->required();
    v->add_option("--draws", val.draws, "Fresh realizations")->check(CLI::PositiveNumber);
    v->add_option("--seed", val.seed);
    v->add_option("--trials", val.trials_csv, "Per-trial CSV");
    v->add_option("--out", val.out, "Report JSON (default stdout)");

    OracleArgs orc;
    auto* o = app.add_subcommand("oracle", "Cross-check the solver and deflation against brute-force references");
    o->add_option("--count", orc.count);
    o->add_option("--K", orc.K);
    o->add_option("--N", orc.N);
    o->add_option("--budget", orc.budget, "Subgradient iterations per start");
    o->add_option("--seed", orc.seed);
    o->add_option("--side-km", orc.side_km);
    o->add_option("--out", orc.out, "Report JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*g) return cmd_generate(gen);
        if (*s) return cmd_solve(sol);
        if (*b) return cmd_benchmark(bm);
        if (*v) return cmd_validate(val);
        if (*o) return cmd_oracle(orc);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
