#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace jpac {

/// x dB -> linear scale.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Deployment parameters for random network instances.
struct GeometryConfig
{
    double square_side_km = 2.0;  ///< transmitters uniform over a square of this side
    double rx_min_radius_m = 10.0;
    double rx_max_radius_m = 400.0;
    double gamma_db = 2.0;
    double eta_db = -90.0;
    double budget_factor = 3.0;  ///< pbar_k = budget_factor * (minimum interference-free LoS power)
    double kappa = 100.0;        ///< Rician factor; +inf gives deterministic 1/d^4 gains
};

/**
 * A K-link single-antenna interference channel.
 *
 * All quantities are linear scale. dist(k, j) is the distance from
 * transmitter j to receiver k. Positions are optional so that hand-built
 * fixtures can be described by their distance matrix alone.
 */
struct NetworkInstance
{
    int K = 0;
    std::optional<Eigen::Matrix2Xd> tx_pos;
    std::optional<Eigen::Matrix2Xd> rx_pos;
    Eigen::VectorXd gamma;
    Eigen::VectorXd eta;
    Eigen::VectorXd pbar;
    double kappa = 0.0;
    Eigen::MatrixXd dist;

    /// Throws std::invalid_argument if any invariant is violated.
    void validate() const;
};

/// Reproducibility record stored alongside sampled data.
struct SeedRecord
{
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> path;
};

/// N sampled K x K gain matrices; gains[n](k, j) is the gain from tx j to rx k.
struct GainSampleSet
{
    int N = 0;
    std::vector<Eigen::MatrixXd> gains;
    SeedRecord seed;

    int K() const { return gains.empty() ? 0 : static_cast<int>(gains.front().rows()); }
    void validate() const;
};

NetworkInstance generate_instance(int K, std::uint64_t rng_seed, const GeometryConfig& geometry = {});

/// Builds an instance from a distance matrix; positions are left empty.
NetworkInstance make_instance(Eigen::MatrixXd dist, Eigen::VectorXd gamma, Eigen::VectorXd eta,
                              Eigen::VectorXd pbar, double kappa);

/// One Rician draw |sqrt(k/(k+1)) + sqrt(1/(k+1)) zeta|^2 / d^4 with zeta ~ CN(0, 1).
class RandomStream;
double rician_gain(double kappa, double d, RandomStream& rng);

GainSampleSet sample_gains(const NetworkInstance& inst, int N, std::uint64_t rng_seed);

/// Sample size for constant-power sample approximation (scenario bound).
int sample_size_constant_power(int K, double eps, double delta);

/// Sample size for adaptive-power sample approximation; independent of K.
int sample_size_adaptive_power(double eps, double delta);

} // namespace jpac
