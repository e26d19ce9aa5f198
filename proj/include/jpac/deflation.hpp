#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include <jpac/cvxsolver.hpp>
#include <jpac/formulation.hpp>

namespace jpac {

/// Noise term of the removal score.
enum class NoiseTerm
{
    raw,         ///< eta_k as is (unnormalized watts)
    normalized,  ///< c_k at the worst sample, i.e. eta_k scaled like the interference terms
};

struct DeflationOptions
{
    ResidualMode mode = ResidualMode::one_sided;
    NoiseTerm noise = NoiseTerm::raw;
    bool warm_start = true;
};

struct Removal
{
    int link = -1;           ///< index into the instance
    double score = 0.0;      ///< interference-plus-noise footprint
    double violation = 0.0;  ///< worst-sample constraint violation of the removed link
};

struct SolverStats
{
    int solves = 0;
    long total_iterations = 0;
    int nonconverged = 0;
};

struct AdmissionOutcome
{
    LinkSet supported;
    std::vector<Removal> removal_trace;
    LinkSet readmitted;
    PowerProfile final_q;             ///< minimal normalized power on `supported`, rows follow `supported`
    Eigen::MatrixXd per_sample_pmin;  ///< N x |supported|, linear units
    SolverStats solver_stats;
    std::string diagnostic;
};

/**
 * Picks the link with the largest interference-plus-noise footprint.
 *
 * For every local link k the worst sample n_k maximizes c^n_k - a^n_k . q^n.
 * The score adds the normalized interference k receives in n_k, the
 * interference k causes to each j in that j's own worst sample, and the noise
 * term. Ties go to the larger violation, then to the smaller index.
 */
Removal removal_rule(const NormalizedProblem& prob, const PowerProfile& qbar, NoiseTerm noise = NoiseTerm::raw);

/// Convex-approximation deflation with adaptive (per-sample) powers.
AdmissionOutcome admission_control(const NetworkInstance& inst, const GainSampleSet& samples, double c,
                                   const SolverConfig& cfg = {}, const DeflationOptions& opts = {});

/// Same pipeline with one constant power vector shared across all samples.
AdmissionOutcome admission_control_constant_power(const NetworkInstance& inst, const GainSampleSet& samples, double c,
                                                  const SolverConfig& cfg = {}, const DeflationOptions& opts = {});

/// Deflation on a single known gain realization (perfect CSI proxy upper bound).
AdmissionOutcome perfect_csi_benchmark(const NetworkInstance& inst, const Eigen::MatrixXd& gain, double c,
                                       const SolverConfig& cfg = {}, const DeflationOptions& opts = {});

/// Exhaustive maximum size of a supported subset; feasible only for small K.
int max_admissible_size(const NetworkInstance& inst, const GainSampleSet& samples);

} // namespace jpac
