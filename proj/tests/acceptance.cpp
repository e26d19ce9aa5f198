// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <jpac/cvxsolver.hpp>
#include <jpac/deflation.hpp>
#include <jpac/harness.hpp>
#include <jpac/timescale.hpp>

#include "support.hpp"

using namespace jpac;
using namespace jpac::testing;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds)
{
    std::printf("criterion %d: %s  %s  (%.1fs)\n", id, pass ? "PASS" : "FAIL", detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

template <class F>
void run(int id, F body)
{
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    report(id, pass, detail, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

bool sample_sizes(std::string& detail)
{
    const int n2 = sample_size_adaptive_power(0.05, 0.01);
    const int n1 = sample_size_constant_power(8, 0.05, 0.01);
    detail = fmt("adaptive N=%d (want 174), constant N=%d (want 418)", n2, n1);
    return n2 == 174 && n1 == 418;
}

/// Criteria 2-4 share one desk-scale experiment.
struct Protocol
{
    ExperimentResult result;
    std::map<std::pair<int, std::string>, MetricsRow> rows;
};

Protocol run_protocol()
{
    ExperimentConfig cfg;
    cfg.K_list = {4, 8, 12};
    cfg.runs = 50;
    cfg.N_override = 174;
    cfg.validation_draws = 2000;
    Protocol p;
    p.result = run_experiment(cfg);
    for (const auto& r : p.result.rows) p.rows[{r.K, r.algorithm}] = r;
    return p;
}

bool outage(const Protocol& p, std::string& detail)
{
    double worst_adaptive = 0.0, worst_constant = 0.0;
    for (const auto& [key, row] : p.rows) {
        if (key.second == "adaptive") worst_adaptive = std::max(worst_adaptive, row.max_outage);
        if (key.second == "constant_power") worst_constant = std::max(worst_constant, row.max_outage);
    }
    // The guarantee at N = 174 belongs to the adaptive scheme; the constant-power
    // baseline would need its own, larger sample count and is reported only.
    detail = fmt("max outage adaptive %.4g (bound 0.05), failed runs %d; constant_power at the same N: %.4g",
                 worst_adaptive, p.result.failed_runs, worst_constant);
    return worst_adaptive <= 0.05 && p.result.failed_runs == 0;
}

bool ordering(const Protocol& p, std::string& detail)
{
    bool ok = true;
    for (int K : {4, 8, 12}) {
        const double pc = p.rows.at({K, "perfect_csi"}).avg_supported;
        const double ad = p.rows.at({K, "adaptive"}).avg_supported;
        const double cp = p.rows.at({K, "constant_power"}).avg_supported;
        ok = ok && pc - ad >= -0.05 && ad - cp >= -0.05;
        detail += fmt("K=%d: %.2f >= %.2f >= %.2f; ", K, pc, ad, cp);
    }
    return ok;
}

bool power(const Protocol& p, std::string& detail)
{
    bool ok = true;
    for (int K : {4, 8, 12}) {
        const double ad = p.rows.at({K, "adaptive"}).avg_total_power;
        const double cp = p.rows.at({K, "constant_power"}).avg_total_power;
        ok = ok && ad <= 1.05 * cp;
        detail += fmt("K=%d: %.4g <= %.4g; ", K, ad, cp);
    }
    return ok;
}

bool solver_oracle(std::string& detail)
{
    NormalizedProblem scalar;
    scalar.K = 1;
    scalar.N = 1;
    scalar.links = {0};
    scalar.a = {Eigen::MatrixXd::Ones(1, 1)};
    scalar.c = Eigen::MatrixXd::Constant(1, 1, 0.5);
    scalar.pbar = Eigen::VectorXd::Ones(1);
    scalar.eta = Eigen::VectorXd::Ones(1);
    scalar.alpha = 0.5;
    const auto s = solve_group_norm(scalar);
    const bool scalar_ok = std::abs(s.q.q(0, 0) - 0.5) <= 1e-6 && std::abs(s.objective - 0.25) <= 1e-6;

    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const auto prob = random_problem(2, 2, 10000 + static_cast<std::uint64_t>(t));
        const double bf = brute_force_minimum(RawGroupProblem::from(prob));
        const double got = solve_group_norm(prob).objective;
        worst = std::max(worst, std::abs(got - bf) / std::max(std::abs(bf), 1e-12));
    }
    detail = fmt("K=1 q*=%.8f obj=%.8f; worst relative gap vs brute force %.3g over 20 instances", s.q.q(0, 0),
                 s.objective, worst);
    return scalar_ok && worst <= 1e-4;
}

bool fm_vs_exact(std::string& detail)
{
    int feasible = 0, infeasible = 0, disagree = 0;
    double worst = 0.0;
    RandomStream rng(6);
    for (std::uint64_t t = 0; feasible < 100 || infeasible < 100; ++t) {
        const int K = 2 + static_cast<int>(t % 7);
        const auto inst = random_instance(K, 20000 + t, t % 2 ? 0.4 : 2.0);
        const auto g = sample_gains(inst, 1, t).gains[0];
        LinkSet s;
        for (int k = 0; k < K; ++k)
            if (rng.uniform() < 0.7) s.push_back(k);
        if (s.empty()) continue;
        const auto rep = exact_feasibility(inst, g, s);
        if (rep.feasible ? feasible >= 100 : infeasible >= 100) continue;
        Eigen::VectorXd p0(static_cast<Eigen::Index>(s.size()));
        for (std::size_t a = 0; a < s.size(); ++a) p0(static_cast<Eigen::Index>(a)) = 0.5 * inst.pbar(s[a]);
        const auto fm = fm_power_control(inst, g, s, p0);
        if (fm.converged != rep.feasible) ++disagree;
        if (rep.feasible) {
            ++feasible;
            const double err = (fm.power - *rep.pmin).cwiseAbs().maxCoeff() / (1.0 + rep.pmin->cwiseAbs().maxCoeff());
            worst = std::max(worst, err);
        } else {
            ++infeasible;
        }
    }
    detail = fmt("%d feasible, %d infeasible, %d disagreements, worst scaled power error %.3g", feasible, infeasible,
                 disagree, worst);
    return disagree == 0 && worst <= 1e-8;
}

bool normalization(std::string& detail)
{
    RandomStream rng(7);
    long probes = 0, disagree = 0, ambiguous = 0;
    for (std::uint64_t t = 0; probes < 100000; ++t) {
        const int K = 2 + static_cast<int>(t % 9);
        const auto inst = random_instance(K, 30000 + t, t % 2 ? 0.5 : 2.0);
        const auto samples = sample_gains(inst, 4, t);
        const auto prob = normalize(inst, samples, 0.999);
        for (int n = 0; n < 4; ++n)
            for (int rep = 0; rep < 5; ++rep) {
                Eigen::VectorXd q(K);
                for (int k = 0; k < K; ++k) q(k) = rng.uniform();
                const Eigen::VectorXd p = q.cwiseProduct(inst.pbar);
                for (int k = 0; k < K && probes < 100000; ++k, ++probes) {
                    const double s = naive_sinr(inst, samples.gains[static_cast<std::size_t>(n)], p, k);
                    if (std::abs(s - inst.gamma(k)) <= 1e-12 * inst.gamma(k)) {
                        ++ambiguous;
                        continue;
                    }
                    const bool lhs = s >= inst.gamma(k);
                    const bool rhs = prob.a[static_cast<std::size_t>(n)].row(k).dot(q) >= prob.c(k, n);
                    disagree += lhs != rhs;
                }
            }
    }
    detail = fmt("%ld probes, %ld disagreements, %ld within the 1e-12 band", probes, disagree, ambiguous);
    return disagree == 0;
}

bool deflation_quality(std::string& detail)
{
    bool ok = true;
    for (int K : {4, 6})
        for (int N : {5, 10}) {
            int larger = 0, match = 0;
            for (int t = 0; t < 100; ++t) {
                const auto inst = generate_instance(K, 40000 + static_cast<std::uint64_t>(1000 * K + 100 * N + t));
                const auto samples = sample_gains(inst, N, static_cast<std::uint64_t>(t));
                const auto out = admission_control(inst, samples, 0.999);
                const int best = max_admissible_size(inst, samples);
                const int got = static_cast<int>(out.supported.size());
                larger += got > best;
                match += got == best;
            }
            ok = ok && larger == 0 && match >= 80;
            detail += fmt("K=%d N=%d: %d/100 optimal, %d oversized; ", K, N, match, larger);
        }
    return ok;
}

bool determinism(std::string& detail)
{
    namespace fs = std::filesystem;
    ExperimentConfig cfg;
    cfg.K_list = {4, 6};
    cfg.runs = 5;
    cfg.validation_draws = 500;
    const auto base = fs::temp_directory_path() / "jpac_acceptance_determinism";
    fs::remove_all(base);
    emit_outputs(run_experiment(cfg), cfg, (base / "a").string());
    emit_outputs(run_experiment(cfg), cfg, (base / "b").string());
    const auto a = slurp(base / "a" / "metrics.csv");
    const auto b = slurp(base / "b" / "metrics.csv");
    fs::remove_all(base);
    detail = fmt("metrics.csv %zu bytes, identical=%s", a.size(), a == b ? "yes" : "no");
    return !a.empty() && a == b;
}

} // namespace

int main()
{
    run(1, sample_sizes);

    Protocol protocol;
    const auto start = std::chrono::steady_clock::now();
    std::string setup_error;
    try {
        protocol = run_protocol();
    } catch (const std::exception& e) {
        setup_error = e.what();
    }
    const double protocol_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    auto protocol_criterion = [&](int id, bool (*check)(const Protocol&, std::string&)) {
        if (!setup_error.empty()) {
            report(id, false, "experiment failed: " + setup_error, protocol_seconds);
            return;
        }
        std::string detail;
        const bool pass = check(protocol, detail);
        report(id, pass, detail, id == 2 ? protocol_seconds : 0.0);
    };
    protocol_criterion(2, outage);
    protocol_criterion(3, ordering);
    protocol_criterion(4, power);

    run(5, solver_oracle);
    run(6, fm_vs_exact);
    run(7, normalization);
    run(8, deflation_quality);
    run(9, determinism);

    std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
