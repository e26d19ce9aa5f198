#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <jpac/formulation.hpp>

namespace jpac {

enum class StepRule
{
    fixed,
    backtracking,
};

struct SolverConfig
{
    int max_iters = 50000;  ///< per continuation stage
    double tol_rel_obj = 1e-6;
    double tol_infeas = 1e-6;
    double smoothing_mu = 1e-6;  ///< final Huber parameter
    double mu_start = 1e-2;
    double mu_factor = 0.1;
    StepRule step_rule = StepRule::backtracking;
    bool record_trace = false;
    std::optional<std::string> trace_path;  ///< CSV: stage,iteration,mu,objective,step

    void validate() const;
};

struct TraceEntry
{
    int stage = 0;
    int iteration = 0;
    double mu = 0.0;
    double objective = 0.0;  ///< Huber-smoothed objective of the accepted iterate
    double step = 0.0;
};

struct SolverResult
{
    PowerProfile q;
    double objective = 0.0;  ///< exact (nonsmooth) objective at q
    int iterations = 0;
    bool converged = false;
    Eigen::VectorXd residual_norms;
    double final_mu = 0.0;
    std::vector<TraceEntry> trace;
};

/**
 * Minimizes sum_k ||r_k(q)||_2 + (alpha / N) sum_n pbar^T q^n over q in [0, 1]^{K x N}.
 *
 * Accelerated projected gradient (monotone FISTA) on the Huber-smoothed
 * objective, with the smoothing parameter decreased geometrically from
 * mu_start to smoothing_mu. Each stage warm-starts from the previous one.
 * The returned q is the best iterate by exact objective.
 */
SolverResult solve_group_norm(const NormalizedProblem& prob, const SolverConfig& cfg = {},
                              const PowerProfile* warm_start = nullptr);

/// Constant-power variant: one q in [0, 1]^K shared by all samples (q has a single column).
SolverResult solve_group_norm_shared(const NormalizedProblem& prob, const SolverConfig& cfg = {},
                                     const PowerProfile* warm_start = nullptr);

/// Huber-smoothed objective sum_k h_mu(||r_k||) + linear term.
double smoothed_objective(const NormalizedProblem& prob, const PowerProfile& q, double mu);

/**
 * Lower bound on the optimal value from weak duality.
 *
 * For dual blocks u_k with ||u_k|| <= 1 (and u_k >= 0 in one-sided mode),
 * sum_k u_k^T c_k + sum_i min(0, (w - sum_k A_k^T u_k)_i) never exceeds the
 * primal optimum. u is taken from the smoothed residuals at q.
 */
double dual_lower_bound(const NormalizedProblem& prob, const PowerProfile& q, double mu);

/**
 * Smallest achievable first-order optimality violation at q.
 *
 * Groups with ||r_k|| <= kink_tol are treated as sitting on the kink of the
 * norm and contribute any admissible subgradient; coordinates within
 * kink_tol of a bound only need a sign-consistent subgradient. Returns the
 * max-abs violation of the best subgradient found.
 */
double stationarity_violation(const NormalizedProblem& prob, const PowerProfile& q, double kink_tol);

struct CertReport
{
    double solver_objective = 0.0;
    double oracle_objective = 0.0;  ///< best projected-subgradient value over all starts
    double lower_bound = 0.0;
    double gap = 0.0;              ///< solver_objective - oracle_objective
    double lower_bound_gap = 0.0;  ///< solver_objective - lower_bound, nonnegative up to round-off
    std::vector<double> start_objectives;
};

/// Long-horizon projected subgradient from three random starts plus a dual bound.
CertReport certify(const NormalizedProblem& prob, const SolverResult& result, int oracle_budget,
                   std::uint64_t seed = 7);

void write_trace_csv(const std::vector<TraceEntry>& trace, const std::string& path);

} // namespace jpac
