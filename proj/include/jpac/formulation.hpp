#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <jpac/netmodel.hpp>

namespace jpac {

/// How constraint residuals enter the group norms.
enum class ResidualMode
{
    one_sided,  ///< max(c - a^T q, 0): satisfied constraints cost nothing (default)
    two_sided,  ///< c - a^T q, the literal norm of A_k q - c_k
};

/// Sorted list of link indices into a NetworkInstance.
using LinkSet = std::vector<int>;

LinkSet all_links(int K);

/**
 * Normalized sample-approximation problem on a subset of links.
 *
 * Local index k refers to link `links[k]` of the originating instance.
 * a[n] is a K x K matrix whose row k is a^n_k (unit diagonal, nonpositive
 * off-diagonal). c(k, n) is the threshold c^n_k. A sample n is satisfied
 * for link k iff a[n].row(k) * q.col(n) >= c(k, n).
 */
struct NormalizedProblem
{
    int K = 0;
    int N = 0;
    LinkSet links;
    std::vector<Eigen::MatrixXd> a;
    Eigen::MatrixXd c;
    Eigen::VectorXd pbar;
    Eigen::VectorXd eta;
    double alpha = 0.0;
    ResidualMode mode = ResidualMode::one_sided;
};

/// Normalized powers q(k, n) = p^n_k / pbar_k in [0, 1]; column n is q^n.
/// A single column against a multi-sample problem is a constant power
/// vector shared by every sample.
struct PowerProfile
{
    Eigen::MatrixXd q;

    int K() const { return static_cast<int>(q.rows()); }
    int N() const { return static_cast<int>(q.cols()); }
};

struct FeasibilityReport
{
    bool feasible = false;
    std::optional<Eigen::VectorXd> pmin;  ///< indexed like the queried subset
    double spectral_radius = 0.0;
    std::string diagnostic;
};

/// alpha = c_fraction / sum(pbar over links).
NormalizedProblem normalize(const NetworkInstance& inst, const GainSampleSet& samples, double c_fraction,
                            const LinkSet& links, ResidualMode mode = ResidualMode::one_sided);

inline NormalizedProblem normalize(const NetworkInstance& inst, const GainSampleSet& samples, double c_fraction)
{
    return normalize(inst, samples, c_fraction, all_links(inst.K));
}

/// Exact minimal-power feasibility of `subset` under one gain matrix.
FeasibilityReport exact_feasibility(const NetworkInstance& inst, const Eigen::MatrixXd& gain,
                                    std::span<const int> subset);

/// Same decision as exact_feasibility without the spectral radius; used on hot paths.
bool feasible_fast(const NetworkInstance& inst, const Eigen::MatrixXd& gain, std::span<const int> subset,
                   Eigen::VectorXd* pmin = nullptr);

/// True iff `subset` is exactly feasible under every sample.
bool supported_exact(const NetworkInstance& inst, const GainSampleSet& samples, std::span<const int> subset);

/**
 * True iff one constant power vector meets every sample's SINR targets on
 * `subset` within budget. Decided exactly by policy iteration on the
 * monotone map p -> max_n (u^n + F^n p); on success `pmin` receives the
 * least such vector.
 */
bool supported_constant(const NetworkInstance& inst, const GainSampleSet& samples, std::span<const int> subset,
                        Eigen::VectorXd* pmin = nullptr);

/// Residual matrix r(k, n) under the problem's residual mode.
Eigen::MatrixXd residuals(const NormalizedProblem& prob, const PowerProfile& q);

/// sum_k ||r_k||_2 + (alpha / N) sum_n pbar^T q^n.
double objective_value(const NormalizedProblem& prob, const PowerProfile& q);

} // namespace jpac
