#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <jpac/cvxsolver.hpp>

#include "support.hpp"

using namespace jpac;
using jpac::testing::random_problem;

namespace {

NormalizedProblem scalar_problem(double c, double alpha)
{
    NormalizedProblem p;
    p.K = 1;
    p.N = 1;
    p.links = {0};
    p.a = {Eigen::MatrixXd::Ones(1, 1)};
    p.c = Eigen::MatrixXd::Constant(1, 1, c);
    p.pbar = Eigen::VectorXd::Ones(1);
    p.eta = Eigen::VectorXd::Ones(1);
    p.alpha = alpha;
    return p;
}

} // namespace

TEST_CASE("single link: the residual dominates the power term")
{
    // f(q) = max(0.5 - q, 0) + 0.5 q has its minimum 0.25 at q = 0.5.
    const auto p = scalar_problem(0.5, 0.5);
    const auto res = solve_group_norm(p);
    CHECK(res.q.q(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(res.objective == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(res.converged);
}

TEST_CASE("non-positive targets give zero power")
{
    auto p = random_problem(3, 4, 5);
    p.c = -p.c.cwiseAbs();
    const auto res = solve_group_norm(p);
    CHECK(res.q.q.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(res.objective <= 1e-12);
}

TEST_CASE("iterates stay in the box")
{
    for (int seed = 0; seed < 10; ++seed) {
        const auto p = random_problem(5, 6, 30 + seed);
        const auto res = solve_group_norm(p);
        CHECK(res.q.q.minCoeff() >= 0.0);
        CHECK(res.q.q.maxCoeff() <= 1.0);
        CHECK(res.q.K() == 5);
        CHECK(res.q.N() == 6);
        CHECK(res.objective == doctest::Approx(objective_value(p, res.q)).epsilon(1e-14));
    }
}

TEST_CASE("smoothed objective decreases within each continuation stage")
{
    const auto p = random_problem(4, 8, 12);
    SolverConfig cfg;
    cfg.record_trace = true;
    const auto res = solve_group_norm(p, cfg);
    REQUIRE(!res.trace.empty());
    for (std::size_t i = 1; i < res.trace.size(); ++i)
        if (res.trace[i].stage == res.trace[i - 1].stage)
            CHECK(res.trace[i].objective <= res.trace[i - 1].objective);
    CHECK(res.trace.front().mu == doctest::Approx(cfg.mu_start));
    CHECK(res.trace.back().mu == doctest::Approx(cfg.smoothing_mu));
}

TEST_CASE("weak duality bound sits below the solver objective")
{
    for (int seed = 0; seed < 20; ++seed) {
        const auto p = random_problem(2 + seed % 4, 3 + seed % 5, 100 + seed);
        const auto res = solve_group_norm(p);
        const double lb = dual_lower_bound(p, res.q, res.final_mu);
        CHECK(res.objective - lb >= -1e-9);
        CHECK(res.objective - lb <= 1e-3 * std::max(1.0, res.objective));
    }
}

TEST_CASE("dual bound is valid at arbitrary points")
{
    // The bound holds for any admissible dual weights, so it must sit below
    // the objective of every feasible q, not only the optimum.
    RandomStream rng(5);
    for (int seed = 0; seed < 20; ++seed) {
        const auto p = random_problem(3, 4, 200 + seed);
        PowerProfile q{Eigen::MatrixXd(3, 4)};
        for (Eigen::Index i = 0; i < q.q.size(); ++i) q.q.data()[i] = rng.uniform();
        const double lb = dual_lower_bound(p, q, 1e-3);
        PowerProfile probe{Eigen::MatrixXd(3, 4)};
        for (int t = 0; t < 50; ++t) {
            for (Eigen::Index i = 0; i < probe.q.size(); ++i) probe.q.data()[i] = rng.uniform();
            CHECK(lb <= objective_value(p, probe) + 1e-12);
        }
    }
}

TEST_CASE("solver matches the long-horizon subgradient oracle")
{
    for (int seed = 0; seed < 5; ++seed) {
        const auto p = random_problem(3, 3, 400 + seed);
        const auto res = solve_group_norm(p);
        const auto cert = certify(p, res, 20000, seed);
        CHECK(cert.lower_bound_gap >= -1e-9);
        CHECK(cert.gap <= 1e-6 * std::max(1.0, cert.oracle_objective));
        CHECK(cert.start_objectives.size() == 3);
    }
}

TEST_CASE("solver matches brute force on four variables")
{
    for (int seed = 0; seed < 4; ++seed) {
        const auto p = random_problem(2, 2, 600 + seed, 0.3);
        const auto res = solve_group_norm(p);
        const double bf = jpac::testing::brute_force_minimum(jpac::testing::RawGroupProblem::from(p), 20000);
        CHECK(res.objective <= bf + 1e-4 * std::max(1.0, bf));
    }
}

TEST_CASE("warm and cold starts reach the same objective")
{
    const auto p = random_problem(5, 6, 77);
    const auto cold = solve_group_norm(p);
    PowerProfile half{Eigen::MatrixXd::Constant(5, 6, 0.5)};
    const auto warm = solve_group_norm(p, {}, &half);
    CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-5));
    // A mismatched warm start is ignored.
    PowerProfile wrong{Eigen::MatrixXd::Constant(4, 6, 0.5)};
    const auto ignored = solve_group_norm(p, {}, &wrong);
    CHECK(ignored.objective == doctest::Approx(cold.objective).epsilon(1e-9));
}

TEST_CASE("scaling c and alpha together scales the optimum")
{
    const auto p = random_problem(3, 4, 88);
    auto scaled = p;
    scaled.c *= 0.5;
    scaled.alpha *= 0.5;
    // f_scaled(q) = f(2 q) / 2, so q* / 2 is admissible for the scaled problem with half the value.
    const auto a = solve_group_norm(p);
    const auto b = solve_group_norm(scaled);
    CHECK(b.objective <= 0.5 * a.objective + 1e-6);
}

TEST_CASE("first-order stationarity at the solution")
{
    // Pointwise stationarity is only a meaningful target on well-conditioned couplings.
    int checked = 0;
    for (int seed = 0; checked < 10; ++seed) {
        const auto p = random_problem(3, 4, 900 + seed);
        double worst = 0.0;
        for (const auto& a : p.a) worst = std::max(worst, a.cwiseAbs().maxCoeff());
        if (worst > 10.0) continue;
        const auto res = solve_group_norm(p);
        CHECK(stationarity_violation(p, res.q, 1e-6) <= 1e-3);
        ++checked;
    }
    // At zero with c > 0 and a tiny alpha, moving up is a descent direction.
    auto p = scalar_problem(0.5, 0.1);
    PowerProfile zero{Eigen::MatrixXd::Zero(1, 1)};
    CHECK(stationarity_violation(p, zero, 1e-9) == doctest::Approx(0.9));
}

TEST_CASE("two-sided residuals")
{
    auto p = scalar_problem(0.5, 0.5);
    p.mode = ResidualMode::two_sided;
    const auto res = solve_group_norm(p);
    CHECK(res.q.q(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(res.objective == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("shared power variant")
{
    // Two samples with c = 0.3 and 0.6: minimize sqrt(sum max(c - q, 0)^2) + 0.1 q.
    NormalizedProblem p = scalar_problem(0.0, 0.1);
    p.N = 2;
    p.a = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    p.c.resize(1, 2);
    p.c << 0.3, 0.6;
    const auto res = solve_group_norm_shared(p);
    REQUIRE(res.q.N() == 1);
    // For q in [0.3, 0.6] the slope is -1 + 0.1 < 0, so the optimum is q = 0.6.
    CHECK(res.q.q(0, 0) == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(res.objective == doctest::Approx(0.06).epsilon(1e-6));
    CHECK(objective_value(p, res.q) == doctest::Approx(res.objective).epsilon(1e-12));
}

TEST_CASE("fixed step rule also converges")
{
    const auto p = random_problem(3, 3, 17);
    SolverConfig cfg;
    cfg.step_rule = StepRule::fixed;
    const auto fixed = solve_group_norm(p, cfg);
    const auto bt = solve_group_norm(p);
    CHECK(fixed.objective == doctest::Approx(bt.objective).epsilon(1e-4));
}

TEST_CASE("trace file")
{
    const auto path = (std::filesystem::temp_directory_path() / "jpac_trace_test.csv").string();
    SolverConfig cfg;
    cfg.trace_path = path;
    const auto res = solve_group_norm(random_problem(2, 3, 3), cfg);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "stage,iteration,mu,objective,step");
    int lines = 0;
    for (std::string line; std::getline(is, line);) ++lines;
    CHECK(lines == static_cast<int>(res.trace.size()));
    std::filesystem::remove(path);
}

TEST_CASE("invalid solver configurations are rejected")
{
    const auto p = scalar_problem(0.5, 0.5);
    SolverConfig cfg;
    cfg.mu_factor = 1.0;
    CHECK_THROWS_AS(solve_group_norm(p, cfg), std::invalid_argument);
    cfg = {};
    cfg.max_iters = 0;
    CHECK_THROWS_AS(solve_group_norm(p, cfg), std::invalid_argument);
    cfg = {};
    cfg.tol_rel_obj = 0.0;
    CHECK_THROWS_AS(solve_group_norm(p, cfg), std::invalid_argument);
}

TEST_CASE("empty problem")
{
    NormalizedProblem p;
    p.N = 3;
    p.c.resize(0, 3);
    const auto res = solve_group_norm(p);
    CHECK(res.q.K() == 0);
    CHECK(res.objective == 0.0);
}
