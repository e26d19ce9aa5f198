#pragma once

// Fixtures and independent oracles shared by the unit and acceptance suites.
// Oracles here are written from the raw definitions with plain loops and do
// not call into the solver or deflation code they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include <jpac/formulation.hpp>
#include <jpac/netmodel.hpp>
#include <jpac/rng.hpp>

namespace jpac::testing {

/// Random network with K links in a compact area so that interference matters.
inline NetworkInstance random_instance(int K, std::uint64_t seed, double side_km = 0.6, double kappa = 100.0)
{
    GeometryConfig geo;
    geo.square_side_km = side_km;
    geo.kappa = kappa;
    return generate_instance(K, seed, geo);
}

/// Plain-loop SINR of link k under full power vector p (zeros for inactive links).
inline double naive_sinr(const NetworkInstance& inst, const Eigen::MatrixXd& g, const Eigen::VectorXd& p, int k)
{
    double den = inst.eta(k);
    for (int j = 0; j < inst.K; ++j)
        if (j != k) den += g(k, j) * p(j);
    return g(k, k) * p(k) / den;
}

/// Raw data of a small group-norm problem, evaluated straight from the definition.
struct RawGroupProblem
{
    int K = 0, N = 0;
    std::vector<Eigen::MatrixXd> a;  // a[n](k, j)
    Eigen::MatrixXd c;               // c(k, n)
    Eigen::VectorXd pbar;
    double alpha = 0.0;

    static RawGroupProblem from(const NormalizedProblem& p)
    {
        return {p.K, p.N, p.a, p.c, p.pbar, p.alpha};
    }

    /// q laid out as q[k * N + n].
    double objective(const std::vector<double>& q) const
    {
        double total = 0.0;
        for (int k = 0; k < K; ++k) {
            double sq = 0.0;
            for (int n = 0; n < N; ++n) {
                double lhs = 0.0;
                for (int j = 0; j < K; ++j) lhs += a[n](k, j) * q[j * N + n];
                const double r = std::max(c(k, n) - lhs, 0.0);
                sq += r * r;
            }
            total += std::sqrt(sq);
        }
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n) total += alpha / N * pbar(k) * q[k * N + n];
        return total;
    }

    std::vector<double> subgradient(const std::vector<double>& q) const
    {
        std::vector<double> g(q.size(), 0.0);
        for (int k = 0; k < K; ++k) {
            std::vector<double> r(N);
            double sq = 0.0;
            for (int n = 0; n < N; ++n) {
                double lhs = 0.0;
                for (int j = 0; j < K; ++j) lhs += a[n](k, j) * q[j * N + n];
                r[n] = std::max(c(k, n) - lhs, 0.0);
                sq += r[n] * r[n];
            }
            const double nrm = std::sqrt(sq);
            if (nrm == 0.0) continue;
            for (int n = 0; n < N; ++n)
                for (int j = 0; j < K; ++j) g[j * N + n] -= r[n] / nrm * a[n](k, j);
        }
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n) g[k * N + n] += alpha / N * pbar(k);
        return g;
    }
};

/**
 * Brute-force minimum for K * N == 4 variables: a global grid of step 0.02,
 * a local grid of step 1e-3 around the best point, then projected
 * subgradient refinement from that point.
 */
inline double brute_force_minimum(const RawGroupProblem& P, int refine_iters = 100000)
{
    const int dim = P.K * P.N;
    if (dim != 4) throw std::invalid_argument("brute_force_minimum expects 4 variables");

    std::vector<double> q(4), best_q(4);
    double best = std::numeric_limits<double>::infinity();
    auto scan = [&](const std::vector<double>& lo, double step, int count) {
        std::vector<double> base = best_q;
        for (int i0 = 0; i0 <= count; ++i0)
            for (int i1 = 0; i1 <= count; ++i1)
                for (int i2 = 0; i2 <= count; ++i2)
                    for (int i3 = 0; i3 <= count; ++i3) {
                        const int idx[4] = {i0, i1, i2, i3};
                        bool inside = true;
                        for (int d = 0; d < 4; ++d) {
                            q[d] = lo[d] + step * idx[d];
                            inside = inside && q[d] >= 0.0 && q[d] <= 1.0;
                        }
                        if (!inside) continue;
                        const double f = P.objective(q);
                        if (f < best) {
                            best = f;
                            best_q = q;
                        }
                    }
    };
    scan({0, 0, 0, 0}, 0.02, 50);
    std::vector<double> lo(4);
    for (int d = 0; d < 4; ++d) lo[d] = best_q[d] - 0.02;
    scan(lo, 1e-3, 40);

    q = best_q;
    for (int it = 0; it < refine_iters; ++it) {
        const auto g = P.subgradient(q);
        double gn = 0.0;
        for (double v : g) gn += v * v;
        gn = std::sqrt(gn);
        if (gn == 0.0) break;
        const double step = 1e-3 / std::sqrt(1.0 + it);
        for (int d = 0; d < 4; ++d) q[d] = std::clamp(q[d] - step * g[d] / gn, 0.0, 1.0);
        best = std::min(best, P.objective(q));
    }
    return best;
}

/// Straight-line footprint removal: returns the local index chosen.
inline int naive_removal(const NormalizedProblem& P, const Eigen::MatrixXd& q)
{
    std::vector<int> nbar(P.K);
    std::vector<double> viol(P.K);
    for (int k = 0; k < P.K; ++k) {
        double best = -1e300;
        for (int n = 0; n < P.N; ++n) {
            double v = P.c(k, n);
            for (int j = 0; j < P.K; ++j) v -= P.a[n](k, j) * q(j, n);
            if (v > best) {
                best = v;
                nbar[k] = n;
            }
        }
        viol[k] = best;
    }
    int pick = 0;
    double pick_score = -1e300, pick_viol = -1e300;
    for (int k = 0; k < P.K; ++k) {
        double s = P.eta(k);
        for (int j = 0; j < P.K; ++j) {
            if (j == k) continue;
            s += std::fabs(P.a[nbar[k]](k, j)) * q(j, nbar[k]);
            s += std::fabs(P.a[nbar[j]](j, k)) * q(k, nbar[j]);
        }
        if (s > pick_score || (s == pick_score && viol[k] > pick_viol)) {
            pick = k;
            pick_score = s;
            pick_viol = viol[k];
        }
    }
    return pick;
}

/// A random normalized problem built from a random network and Rician samples.
inline NormalizedProblem random_problem(int K, int N, std::uint64_t seed, double side_km = 0.6)
{
    const auto inst = random_instance(K, seed, side_km);
    const auto samples = sample_gains(inst, N, seed + 1000);
    return normalize(inst, samples, 0.999);
}

} // namespace jpac::testing
