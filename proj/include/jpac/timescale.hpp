#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <jpac/formulation.hpp>

namespace jpac {

struct FmOptions
{
    int max_iters = 100000;
    double tol = 1e-10;
    bool keep_iterates = false;
};

struct FMTrace
{
    std::vector<Eigen::VectorXd> iterates;  ///< only filled with keep_iterates; includes p_init
    Eigen::VectorXd power;                  ///< final powers, indexed like the link subset
    Eigen::VectorXd final_sinr;
    bool converged = false;
    int iterations = 0;
};

/**
 * Budget-clipped Foschini-Miljanic iteration p_k <- min(pbar_k, gamma_k p_k / SINR_k(p)).
 *
 * Stops when the sup-norm step falls below tol * ||p||_inf. converged is
 * true only if the iteration stopped there and every link meets its target
 * to within 1e-6.
 */
FMTrace fm_power_control(const NetworkInstance& inst, const Eigen::MatrixXd& gain, std::span<const int> subset,
                         const Eigen::VectorXd& p_init, const FmOptions& opts = {});

struct TrialRecord
{
    int trial = 0;
    bool outage = false;
    double total_power = 0.0;
    int fm_iterations = 0;
};

struct TwoTimescaleReport
{
    int outage_count = 0;
    int trials = 0;
    double outage_ratio = 0.0;
    double avg_total_power = 0.0;  ///< over non-outage trials, supported links only
    int detector_disagreements = 0;
    std::vector<TrialRecord> records;
};

/**
 * Small-timescale operation of an admitted set over T fresh realizations.
 *
 * Outage is decided by exact feasibility on each realization; the FM run
 * (warm-started from the previous trial, first trial from pbar / 2) is a
 * second detector whose disagreements are counted.
 */
TwoTimescaleReport run_two_timescale(const NetworkInstance& inst, std::span<const int> supported, int T,
                                     std::uint64_t rng_seed, const FmOptions& opts = {});

/// Outage of a fixed power vector (indexed like `supported`) over T fresh realizations.
TwoTimescaleReport run_constant_power(const NetworkInstance& inst, std::span<const int> supported,
                                      const Eigen::VectorXd& power, int T, std::uint64_t rng_seed);

void write_trials_csv(const TwoTimescaleReport& report, const std::string& path);

} // namespace jpac
