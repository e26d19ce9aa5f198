#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace jpac {

template <typename Scalar>
struct SpectralRadiusResult
{
    Scalar value = 0;
    int iterations = 0;
    bool dense_fallback = false;
};

/**
 * Spectral radius of an entrywise nonnegative square matrix.
 *
 * Power iteration runs on I + F, which has the same Perron vector as F and a
 * strictly dominant eigenvalue 1 + rho(F) whenever F is irreducible. The
 * Collatz-Wielandt quotients min_i (Fx)_i / x_i and max_i (Fx)_i / x_i bracket
 * rho(F) for every positive x, so the loop stops once the bracket is tight.
 * Reducible or slowly converging matrices of size <= 64 fall back to a dense
 * eigensolve.
 */
template <typename Derived>
SpectralRadiusResult<typename Derived::Scalar>
spectral_radius_nonneg(const Eigen::MatrixBase<Derived>& F, typename Derived::Scalar tol = 1e-10,
                       int max_iters = 10000)
{
    using Scalar = typename Derived::Scalar;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index n = F.rows();
    SpectralRadiusResult<Scalar> out;
    if (n == 0) return out;
    if (n == 1) {
        out.value = std::abs(F(0, 0));
        return out;
    }

    Vec x = Vec::Ones(n);
    Scalar lo = 0, hi = std::numeric_limits<Scalar>::infinity();
    bool positive = true;
    for (int it = 0; it < max_iters; ++it) {
        const Vec Fx = F * x;
        lo = std::numeric_limits<Scalar>::infinity();
        hi = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(x(i) > 0)) {
                positive = false;
                break;
            }
            const Scalar r = Fx(i) / x(i);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        out.iterations = it + 1;
        if (!positive) break;
        if (hi - lo <= tol * std::max(hi, Scalar(1))) {
            out.value = Scalar(0.5) * (lo + hi);
            return out;
        }
        x += Fx;
        x /= x.maxCoeff();
    }

    if (n <= 64) {
        Eigen::EigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> es(F.eval(), false);
        out.value = es.eigenvalues().cwiseAbs().maxCoeff();
        out.dense_fallback = true;
        return out;
    }
    out.value = positive ? Scalar(0.5) * (lo + hi) : hi;
    return out;
}

/// Normalized interference matrix F (F_kj = gamma_k g_kj / g_kk, zero diagonal)
/// and noise vector u (u_k = gamma_k eta_k / g_kk) restricted to `subset`.
template <typename GainDerived, typename VecDerived, typename Subset>
void interference_system(const Eigen::MatrixBase<GainDerived>& g, const Eigen::MatrixBase<VecDerived>& gamma,
                         const Eigen::MatrixBase<VecDerived>& eta, const Subset& subset,
                         Eigen::Matrix<typename GainDerived::Scalar, Eigen::Dynamic, Eigen::Dynamic>& F,
                         Eigen::Matrix<typename GainDerived::Scalar, Eigen::Dynamic, 1>& u)
{
    const auto m = static_cast<Eigen::Index>(std::size(subset));
    F.resize(m, m);
    u.resize(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto k = subset[a];
        const auto gkk = g(k, k);
        for (Eigen::Index b = 0; b < m; ++b)
            F(a, b) = a == b ? 0 : gamma(k) * g(k, subset[b]) / gkk;
        u(a) = gamma(k) * eta(k) / gkk;
    }
}

/// SINR of every link in `subset` under powers p (indexed like subset).
template <typename GainDerived, typename VecDerived, typename PowDerived, typename Subset>
Eigen::Matrix<typename GainDerived::Scalar, Eigen::Dynamic, 1>
sinr(const Eigen::MatrixBase<GainDerived>& g, const Eigen::MatrixBase<VecDerived>& eta, const Subset& subset,
     const Eigen::MatrixBase<PowDerived>& p)
{
    using Scalar = typename GainDerived::Scalar;
    const auto m = static_cast<Eigen::Index>(std::size(subset));
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto k = subset[a];
        Scalar interference = eta(k);
        for (Eigen::Index b = 0; b < m; ++b)
            if (b != a) interference += g(k, subset[b]) * p(b);
        out(a) = g(k, k) * p(a) / interference;
    }
    return out;
}

} // namespace jpac
