#include <jpac/cvxsolver.hpp>
#include <jpac/rng.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace jpac {

namespace {

/// Shared evaluation machinery for the adaptive (K x N) and shared (K x 1) layouts.
class GroupNormModel
{
public:
    GroupNormModel(const NormalizedProblem& prob, bool shared) : prob_(prob), shared_(shared)
    {
        const double weight = shared ? prob.alpha : prob.alpha / prob.N;
        linear_ = prob.pbar * weight;
        // Diagonal preconditioner: inverse squared column norms of the stacked constraint matrix.
        precond_ = Eigen::MatrixXd::Zero(prob.K, cols());
        for (int n = 0; n < prob.N; ++n)
            precond_.col(shared ? 0 : n) += prob.a[static_cast<std::size_t>(n)].colwise().squaredNorm().transpose();
        precond_ = precond_.cwiseMax(1e-300).cwiseInverse();
    }

    int cols() const { return shared_ ? 1 : prob_.N; }

    /// Pre-clip residual z(k, n) = c^n_k - a^n_k . q^n.
    void raw_residual(const Eigen::MatrixXd& q, Eigen::MatrixXd& z) const
    {
        z.resize(prob_.K, prob_.N);
        for (int n = 0; n < prob_.N; ++n)
            z.col(n).noalias() = prob_.c.col(n) - prob_.a[static_cast<std::size_t>(n)] * q.col(shared_ ? 0 : n);
    }

    void clip(Eigen::MatrixXd& z) const
    {
        if (prob_.mode == ResidualMode::one_sided) z = z.cwiseMax(0.0);
    }

    double linear(const Eigen::MatrixXd& q) const { return (linear_.transpose() * q).sum(); }

    /// Smoothed value; fills the dual weights w(k, n) = r(k, n) / max(||r_k||, mu).
    double value(const Eigen::MatrixXd& q, double mu, Eigen::MatrixXd& r, Eigen::MatrixXd* w) const
    {
        raw_residual(q, r);
        clip(r);
        double total = linear(q);
        if (w) w->resize(prob_.K, prob_.N);
        for (int k = 0; k < prob_.K; ++k) {
            const double t = r.row(k).norm();
            total += t >= mu ? t - 0.5 * mu : t * t / (2.0 * mu);
            if (w) w->row(k) = r.row(k) / std::max(t, mu);
        }
        return total;
    }

    double exact(const Eigen::MatrixXd& q) const
    {
        Eigen::MatrixXd r;
        raw_residual(q, r);
        clip(r);
        double total = linear(q);
        for (int k = 0; k < prob_.K; ++k) total += r.row(k).norm();
        return total;
    }

    /// g = linear - sum_k A_k^T w_k.
    void gradient(const Eigen::MatrixXd& w, Eigen::MatrixXd& g) const
    {
        g.resize(prob_.K, cols());
        if (shared_) {
            g.col(0) = linear_;
            for (int n = 0; n < prob_.N; ++n)
                g.col(0).noalias() -= prob_.a[static_cast<std::size_t>(n)].transpose() * w.col(n);
        } else {
            for (int n = 0; n < prob_.N; ++n) {
                g.col(n) = linear_;
                g.col(n).noalias() -= prob_.a[static_cast<std::size_t>(n)].transpose() * w.col(n);
            }
        }
    }

    /// Upper bound on sum_k ||A_k P^(1/2)||_2^2, the curvature scale of the preconditioned smoothed norms.
    double curvature() const
    {
        double total = 0.0;
        for (int k = 0; k < prob_.K; ++k) {
            double acc = 0.0;
            for (int n = 0; n < prob_.N; ++n) {
                const double s = prob_.a[static_cast<std::size_t>(n)]
                                     .row(k)
                                     .cwiseAbs2()
                                     .dot(precond_.col(shared_ ? 0 : n).transpose());
                acc = shared_ ? acc + s : std::max(acc, s);
            }
            total += acc;
        }
        return std::max(total, 1e-12);
    }

    const Eigen::MatrixXd& precond() const { return precond_; }
    const NormalizedProblem& problem() const { return prob_; }
    bool shared() const { return shared_; }

private:
    const NormalizedProblem& prob_;
    bool shared_;
    Eigen::VectorXd linear_;
    Eigen::MatrixXd precond_;
};

Eigen::MatrixXd project_box(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0).cwiseMin(1.0); }

struct StageOutcome
{
    int iterations = 0;
    bool converged = false;
};

/// Monotone FISTA on the smoothed objective for one value of mu.
StageOutcome run_stage(const GroupNormModel& model, const SolverConfig& cfg, double mu, int stage,
                       Eigen::MatrixXd& x, double& L, std::vector<TraceEntry>* trace)
{
    constexpr int kWindow = 20;
    Eigen::MatrixXd r, w, g, y = x, z, x_prev, d;
    const double L_fixed = model.curvature() / mu;
    if (cfg.step_rule == StepRule::fixed) L = L_fixed;

    double fx = model.value(x, mu, r, nullptr);
    double t = 1.0;
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(std::min(cfg.max_iters, 1 << 16)));
    history.push_back(fx);

    StageOutcome out;
    for (int it = 0; it < cfg.max_iters; ++it) {
        const double fy = model.value(y, mu, r, &w);
        model.gradient(w, g);

        double fz = 0.0;
        for (;;) {
            z = project_box(y - model.precond().cwiseProduct(g) / L);
            d = z - y;
            fz = model.value(z, mu, r, nullptr);
            if (cfg.step_rule == StepRule::fixed) break;
            const double model_bound =
                fy + (g.array() * d.array()).sum() + 0.5 * L * (d.array().square() / model.precond().array()).sum();
            if (fz <= model_bound + 1e-14 * std::abs(fy)) break;
            L *= 2.0;
            if (L > 1e4 * L_fixed) break;
        }

        x_prev = x;
        const bool improved = fz <= fx;
        if (improved) {
            x = z;
            fx = fz;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (improved) {
            y = x + ((t - 1.0) / t_next) * (x - x_prev);
            t = t_next;
        } else {
            // No progress along the momentum direction: restart from the incumbent.
            y = x;
            t = 1.0;
        }

        if (trace) trace->push_back({stage, it, mu, fx, 1.0 / L});
        history.push_back(fx);
        out.iterations = it + 1;

        const double step = d.cwiseAbs().maxCoeff();
        if (step <= 1e-14) {
            out.converged = true;
            break;
        }
        if (history.size() > kWindow) {
            const double before = history[history.size() - 1 - kWindow];
            if (before - fx <= cfg.tol_rel_obj * 1e-2 * std::max(std::abs(fx), 1e-12)) {
                out.converged = true;
                break;
            }
        }
        if (cfg.step_rule == StepRule::backtracking) L = std::max(L * 0.9, 1e-12);
    }
    return out;
}

SolverResult solve_impl(const NormalizedProblem& prob, const SolverConfig& cfg, const PowerProfile* warm,
                        bool shared)
{
    cfg.validate();
    if (prob.K == 0) {
        SolverResult empty;
        empty.q.q.resize(0, shared ? 1 : prob.N);
        empty.converged = true;
        return empty;
    }
    const GroupNormModel model(prob, shared);

    Eigen::MatrixXd x;
    if (warm && warm->K() == prob.K && warm->N() == model.cols())
        x = project_box(warm->q);
    else
        x = Eigen::MatrixXd::Zero(prob.K, model.cols());

    SolverResult res;
    std::vector<TraceEntry>* trace = (cfg.record_trace || cfg.trace_path) ? &res.trace : nullptr;

    const double mu_end = std::max(cfg.smoothing_mu, 1e-12);
    double mu = std::max(cfg.mu_start, mu_end);
    double L = model.curvature() / mu * 1e-2;
    Eigen::MatrixXd best = x;
    double best_obj = model.exact(x);
    bool last_converged = false;
    for (int stage = 0;; ++stage) {
        const auto outcome = run_stage(model, cfg, mu, stage, x, L, trace);
        res.iterations += outcome.iterations;
        last_converged = outcome.converged;
        const double obj = model.exact(x);
        if (obj <= best_obj) {
            best_obj = obj;
            best = x;
        }
        if (mu <= mu_end * (1.0 + 1e-12)) break;
        mu = std::max(mu * cfg.mu_factor, mu_end);
        // The smoothed curvature grows as mu shrinks.
        L /= cfg.mu_factor;
    }

    res.q.q = std::move(best);
    res.objective = best_obj;
    res.converged = last_converged;
    res.final_mu = mu_end;
    const Eigen::MatrixXd r = residuals(prob, res.q);
    res.residual_norms = r.rowwise().norm();
    if (cfg.trace_path) write_trace_csv(res.trace, *cfg.trace_path);
    return res;
}

bool is_shared(const NormalizedProblem& prob, const PowerProfile& q) { return q.N() == 1 && prob.N > 1; }

} // namespace

void SolverConfig::validate() const
{
    if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
    if (!(tol_rel_obj > 0) || !(tol_infeas > 0)) throw std::invalid_argument("solver: tolerances must be positive");
    if (!(smoothing_mu >= 0)) throw std::invalid_argument("solver: smoothing_mu must be nonnegative");
    if (!(mu_start > 0)) throw std::invalid_argument("solver: mu_start must be positive");
    if (!(mu_factor > 0 && mu_factor < 1)) throw std::invalid_argument("solver: mu_factor must lie in (0, 1)");
}

SolverResult solve_group_norm(const NormalizedProblem& prob, const SolverConfig& cfg, const PowerProfile* warm_start)
{
    return solve_impl(prob, cfg, warm_start, false);
}

SolverResult solve_group_norm_shared(const NormalizedProblem& prob, const SolverConfig& cfg,
                                     const PowerProfile* warm_start)
{
    return solve_impl(prob, cfg, warm_start, true);
}

double smoothed_objective(const NormalizedProblem& prob, const PowerProfile& q, double mu)
{
    const GroupNormModel model(prob, is_shared(prob, q));
    Eigen::MatrixXd r;
    return model.value(q.q, mu, r, nullptr);
}

double dual_lower_bound(const NormalizedProblem& prob, const PowerProfile& q, double mu)
{
    const bool shared = is_shared(prob, q);
    const GroupNormModel model(prob, shared);
    Eigen::MatrixXd r, u, g;
    model.value(q.q, std::max(mu, 1e-300), r, &u);

    // D(u) = sum_k u_k^T c_k + sum_i min(0, g_i(u)) with g = linear - sum_k A_k^T u_k.
    auto dual = [&](const Eigen::MatrixXd& v) {
        model.gradient(v, g);
        return (v.array() * prob.c.array()).sum() + g.cwiseMin(0.0).sum();
    };
    auto project = [&](Eigen::MatrixXd& v) {
        if (prob.mode == ResidualMode::one_sided) v = v.cwiseMax(0.0);
        for (int k = 0; k < prob.K; ++k) {
            const double nrm = v.row(k).norm();
            if (nrm > 1.0) v.row(k) /= nrm;
        }
    };
    project(u);
    double best = dual(u);

    // Projected supergradient ascent with per-group steps; every admissible u yields a valid bound.
    Eigen::VectorXd scale = Eigen::VectorXd::Zero(prob.K);
    for (const auto& a : prob.a) scale = scale.cwiseMax(a.cwiseAbs().rowwise().sum());
    Eigen::MatrixXd sup(prob.K, prob.N), neg;
    for (int it = 0; it < 2000; ++it) {
        neg = (g.array() < 0.0).cast<double>().matrix();
        for (int n = 0; n < prob.N; ++n)
            sup.col(n) = prob.c.col(n) - prob.a[static_cast<std::size_t>(n)] * neg.col(shared ? 0 : n);
        const double step = 0.1 / std::sqrt(1.0 + it);
        for (int k = 0; k < prob.K; ++k) {
            const double sn = sup.row(k).norm();
            if (sn > 0.0) u.row(k) += (step / std::max(sn, scale(k))) * sup.row(k);
        }
        project(u);
        best = std::max(best, dual(u));
    }
    return best;
}

double stationarity_violation(const NormalizedProblem& prob, const PowerProfile& q, double kink_tol)
{
    const bool shared = is_shared(prob, q);
    const GroupNormModel model(prob, shared);
    Eigen::MatrixXd z;
    model.raw_residual(q.q, z);
    Eigen::MatrixXd r = z;
    model.clip(r);

    // Fixed weights for groups off the kink; free (projected) weights on it.
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(prob.K, prob.N);
    Eigen::MatrixXd free_mask = Eigen::MatrixXd::Zero(prob.K, prob.N);
    std::vector<bool> on_kink(static_cast<std::size_t>(prob.K), false);
    for (int k = 0; k < prob.K; ++k) {
        const double t = r.row(k).norm();
        if (t > kink_tol) {
            w.row(k) = r.row(k) / t;
        } else {
            on_kink[static_cast<std::size_t>(k)] = true;
            for (int n = 0; n < prob.N; ++n)
                if (prob.mode == ResidualMode::two_sided || z(k, n) >= -kink_tol) free_mask(k, n) = 1.0;
        }
    }

    const Eigen::MatrixXd& x = q.q;
    auto violation = [&](const Eigen::MatrixXd& g) {
        Eigen::MatrixXd v(g.rows(), g.cols());
        for (Eigen::Index i = 0; i < g.rows(); ++i)
            for (Eigen::Index j = 0; j < g.cols(); ++j) {
                const double gi = g(i, j);
                if (x(i, j) <= kink_tol) v(i, j) = std::min(gi, 0.0);
                else if (x(i, j) >= 1.0 - kink_tol) v(i, j) = std::max(gi, 0.0);
                else v(i, j) = gi;
            }
        return v;
    };
    auto project = [&](Eigen::MatrixXd& u) {
        u = u.cwiseProduct(free_mask);
        if (prob.mode == ResidualMode::one_sided) u = u.cwiseMax(0.0);
        for (int k = 0; k < prob.K; ++k) {
            if (!on_kink[static_cast<std::size_t>(k)]) {
                u.row(k).setZero();
                continue;
            }
            const double nrm = u.row(k).norm();
            if (nrm > 1.0) u.row(k) /= nrm;
        }
    };

    Eigen::MatrixXd g, v, u = Eigen::MatrixXd::Zero(prob.K, prob.N), grad_u, tmp;
    model.gradient(w, g);
    double best = violation(g).cwiseAbs().maxCoeff();
    if (std::none_of(on_kink.begin(), on_kink.end(), [](bool b) { return b; })) return best;

    // Minimize 0.5 * ||violation(g(w + u))||^2 over admissible u by projected gradient.
    double lipschitz = 1e-12;
    for (const auto& a : prob.a) lipschitz += a.squaredNorm();
    const double step = 1.0 / lipschitz;
    Eigen::MatrixXd u_prev = u, y = u;
    double t = 1.0;
    for (int it = 0; it < 20000; ++it) {
        model.gradient(w + y, g);
        v = violation(g);
        // d/du of 0.5||v||^2 = -A v  (per sample), since g = linear - A^T (w + u).
        grad_u.resize(prob.K, prob.N);
        for (int n = 0; n < prob.N; ++n)
            grad_u.col(n) = -(prob.a[static_cast<std::size_t>(n)] * v.col(shared ? 0 : n));
        u_prev = u;
        u = y - step * grad_u;
        project(u);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = u + ((t - 1.0) / t_next) * (u - u_prev);
        t = t_next;
        model.gradient(w + u, tmp);
        best = std::min(best, violation(tmp).cwiseAbs().maxCoeff());
        if (best <= 1e-14) break;
    }
    return best;
}

CertReport certify(const NormalizedProblem& prob, const SolverResult& result, int oracle_budget, std::uint64_t seed)
{
    const bool shared = is_shared(prob, result.q);
    const GroupNormModel model(prob, shared);
    CertReport rep;
    rep.solver_objective = model.exact(result.q.q);
    rep.lower_bound = dual_lower_bound(prob, result.q, std::max(result.final_mu, 1e-12));
    rep.lower_bound_gap = rep.solver_objective - rep.lower_bound;
    rep.oracle_objective = std::numeric_limits<double>::infinity();

    RandomStream rng(seed, {0x63657274ULL});
    const int cols = model.cols();
    Eigen::MatrixXd r, w, g;
    for (int start = 0; start < 3; ++start) {
        Eigen::MatrixXd x(prob.K, cols);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
        double best = model.exact(x);
        for (int it = 0; it < oracle_budget; ++it) {
            // Subgradient of the exact objective (mu -> 0 weights).
            model.value(x, 1e-300, r, &w);
            for (int k = 0; k < prob.K; ++k)
                if (r.row(k).norm() == 0.0) w.row(k).setZero();
            model.gradient(w, g);
            const double gn = g.norm();
            if (gn == 0.0) break;
            x = project_box(x - (0.1 / std::sqrt(1.0 + it)) * g / gn);
            best = std::min(best, model.exact(x));
        }
        rep.start_objectives.push_back(best);
        rep.oracle_objective = std::min(rep.oracle_objective, best);
    }
    rep.gap = rep.solver_objective - rep.oracle_objective;
    return rep;
}

void write_trace_csv(const std::vector<TraceEntry>& trace, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open trace file: " + path);
    os.precision(17);
    os << "stage,iteration,mu,objective,step\n";
    for (const auto& e : trace)
        os << e.stage << ',' << e.iteration << ',' << e.mu << ',' << e.objective << ',' << e.step << '\n';
}

} // namespace jpac
