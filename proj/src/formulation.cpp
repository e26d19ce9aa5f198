#include <jpac/formulation.hpp>
#include <jpac/linalg.hpp>

#include <limits>
#include <numeric>
#include <stdexcept>

namespace jpac {

namespace {

constexpr double kRadiusMargin = 1e-12;
constexpr double kBudgetSlack = 1e-9;

void check_subset(const NetworkInstance& inst, std::span<const int> subset)
{
    for (std::size_t i = 0; i < subset.size(); ++i) {
        if (subset[i] < 0 || subset[i] >= inst.K) throw std::out_of_range("link index out of range");
        if (i > 0 && subset[i] <= subset[i - 1]) throw std::invalid_argument("link set must be sorted and unique");
    }
}

bool within_budget(const NetworkInstance& inst, std::span<const int> subset, const Eigen::VectorXd& p)
{
    for (std::size_t a = 0; a < subset.size(); ++a) {
        const auto i = static_cast<Eigen::Index>(a);
        if (!(p(i) > 0) || p(i) > inst.pbar(subset[a]) * (1.0 + kBudgetSlack)) return false;
    }
    return true;
}

} // namespace

LinkSet all_links(int K)
{
    LinkSet out(static_cast<std::size_t>(K));
    std::iota(out.begin(), out.end(), 0);
    return out;
}

NormalizedProblem normalize(const NetworkInstance& inst, const GainSampleSet& samples, double c_fraction,
                            const LinkSet& links, ResidualMode mode)
{
    if (!(c_fraction > 0 && c_fraction < 1)) throw std::invalid_argument("normalize: c must lie in (0, 1)");
    if (samples.K() != inst.K) throw std::invalid_argument("normalize: samples do not match instance");
    check_subset(inst, links);

    NormalizedProblem prob;
    prob.K = static_cast<int>(links.size());
    prob.N = samples.N;
    prob.links = links;
    prob.mode = mode;
    prob.pbar.resize(prob.K);
    prob.eta.resize(prob.K);
    for (int k = 0; k < prob.K; ++k) {
        prob.pbar(k) = inst.pbar(links[k]);
        prob.eta(k) = inst.eta(links[k]);
    }
    prob.alpha = prob.K > 0 ? c_fraction / prob.pbar.sum() : 0.0;

    prob.c.resize(prob.K, prob.N);
    prob.a.reserve(static_cast<std::size_t>(prob.N));
    for (int n = 0; n < prob.N; ++n) {
        const auto& g = samples.gains[static_cast<std::size_t>(n)];
        Eigen::MatrixXd a(prob.K, prob.K);
        for (int k = 0; k < prob.K; ++k) {
            const int lk = links[k];
            const double gkk = g(lk, lk);
            if (!(gkk > 0)) throw std::invalid_argument("normalize: zero direct gain");
            const double scale = inst.gamma(lk) / (gkk * inst.pbar(lk));
            for (int j = 0; j < prob.K; ++j)
                a(k, j) = k == j ? 1.0 : -scale * g(lk, links[j]) * inst.pbar(links[j]);
            prob.c(k, n) = scale * inst.eta(lk);
        }
        prob.a.push_back(std::move(a));
    }
    return prob;
}

FeasibilityReport exact_feasibility(const NetworkInstance& inst, const Eigen::MatrixXd& gain,
                                    std::span<const int> subset)
{
    check_subset(inst, subset);
    FeasibilityReport rep;
    if (subset.empty()) {
        rep.feasible = true;
        rep.pmin = Eigen::VectorXd();
        return rep;
    }
    Eigen::MatrixXd F;
    Eigen::VectorXd u;
    interference_system(gain, inst.gamma, inst.eta, subset, F, u);
    rep.spectral_radius = spectral_radius_nonneg(F).value;
    if (!(rep.spectral_radius < 1.0 - kRadiusMargin)) {
        rep.diagnostic = "spectral radius >= 1";
        return rep;
    }
    const auto m = static_cast<Eigen::Index>(subset.size());
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(m, m) - F);
    Eigen::VectorXd p = lu.solve(u);
    if (!p.allFinite()) {
        rep.diagnostic = "singular system";
        return rep;
    }
    rep.pmin = p;
    rep.feasible = within_budget(inst, subset, p);
    if (!rep.feasible) rep.diagnostic = "minimal power exceeds budget";
    return rep;
}

bool feasible_fast(const NetworkInstance& inst, const Eigen::MatrixXd& gain, std::span<const int> subset,
                   Eigen::VectorXd* pmin)
{
    if (subset.empty()) return true;
    Eigen::MatrixXd F;
    Eigen::VectorXd u;
    interference_system(gain, inst.gamma, inst.eta, subset, F, u);
    const auto m = static_cast<Eigen::Index>(subset.size());
    // For nonnegative F and positive u, (I - F) p = u has a positive solution iff rho(F) < 1.
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(m, m) - F);
    Eigen::VectorXd p = lu.solve(u);
    if (!p.allFinite() || !within_budget(inst, subset, p)) return false;
    // Guard against round-off producing a positive solution for a nearly singular system.
    if (((Eigen::MatrixXd::Identity(m, m) - F) * p - u).cwiseAbs().maxCoeff() > 1e-9 * u.cwiseAbs().maxCoeff())
        return false;
    if (pmin) *pmin = std::move(p);
    return true;
}

bool supported_exact(const NetworkInstance& inst, const GainSampleSet& samples, std::span<const int> subset)
{
    check_subset(inst, subset);
    for (const auto& g : samples.gains)
        if (!feasible_fast(inst, g, subset)) return false;
    return true;
}

bool supported_constant(const NetworkInstance& inst, const GainSampleSet& samples, std::span<const int> subset,
                        Eigen::VectorXd* pmin)
{
    check_subset(inst, subset);
    const auto m = static_cast<Eigen::Index>(subset.size());
    if (m == 0) {
        if (pmin) pmin->resize(0);
        return true;
    }
    std::vector<Eigen::MatrixXd> F(samples.gains.size());
    std::vector<Eigen::VectorXd> u(samples.gains.size());
    for (std::size_t n = 0; n < samples.gains.size(); ++n)
        interference_system(samples.gains[n], inst.gamma, inst.eta, subset, F[n], u[n]);

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd F_pol(m, m);
    Eigen::VectorXd u_pol(m), Tp(m);
    // Each policy solve returns a point no lower than the previous one, so no policy repeats.
    for (int it = 0; it < 10000; ++it) {
        for (Eigen::Index a = 0; a < m; ++a) {
            std::size_t best = 0;
            double best_val = -std::numeric_limits<double>::infinity();
            for (std::size_t n = 0; n < F.size(); ++n) {
                const double v = u[n](a) + F[n].row(a).dot(p);
                if (v > best_val) {
                    best_val = v;
                    best = n;
                }
            }
            F_pol.row(a) = F[best].row(a);
            u_pol(a) = u[best](a);
        }
        Eigen::VectorXd next = Eigen::PartialPivLU<Eigen::MatrixXd>(I - F_pol).solve(u_pol);
        if (!next.allFinite() || !within_budget(inst, subset, next)) return false;
        if (((I - F_pol) * next - u_pol).cwiseAbs().maxCoeff() > 1e-9 * u_pol.cwiseAbs().maxCoeff()) return false;
        Tp.setConstant(-std::numeric_limits<double>::infinity());
        for (std::size_t n = 0; n < F.size(); ++n) Tp = Tp.cwiseMax(u[n] + F[n] * next);
        if ((Tp - next).maxCoeff() <= 1e-12 * next.maxCoeff()) {
            if (pmin) *pmin = std::move(next);
            return true;
        }
        p = std::move(next);
    }
    return false;
}

Eigen::MatrixXd residuals(const NormalizedProblem& prob, const PowerProfile& q)
{
    Eigen::MatrixXd r(prob.K, prob.N);
    for (int n = 0; n < prob.N; ++n) {
        const auto qn = q.q.col(q.N() == 1 ? 0 : n);
        r.col(n) = prob.c.col(n) - prob.a[static_cast<std::size_t>(n)] * qn;
    }
    if (prob.mode == ResidualMode::one_sided) r = r.cwiseMax(0.0);
    return r;
}

double objective_value(const NormalizedProblem& prob, const PowerProfile& q)
{
    const Eigen::MatrixXd r = residuals(prob, q);
    double total = 0.0;
    for (int k = 0; k < prob.K; ++k) total += r.row(k).norm();
    // A single-column profile is a constant power vector shared by all samples.
    const double power = q.N() == 1 ? prob.pbar.dot(q.q.col(0)) : (prob.pbar.transpose() * q.q).sum() / prob.N;
    return total + prob.alpha * power;
}

} // namespace jpac
