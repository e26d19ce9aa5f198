#include <jpac/deflation.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace jpac {

namespace {

using SupportPredicate = std::function<bool(const LinkSet&)>;
using Solve = SolverResult (*)(const NormalizedProblem&, const SolverConfig&, const PowerProfile*);

LinkSet with_link(LinkSet s, int k)
{
    s.insert(std::lower_bound(s.begin(), s.end(), k), k);
    return s;
}

/// Drops local row `row` from a warm start.
PowerProfile without_row(const PowerProfile& q, int row)
{
    PowerProfile out;
    out.q.resize(q.K() - 1, q.N());
    for (int k = 0, dst = 0; k < q.K(); ++k)
        if (k != row) out.q.row(dst++) = q.q.row(k);
    return out;
}

AdmissionOutcome deflate(const NetworkInstance& inst, const GainSampleSet& samples, double c,
                         const SolverConfig& cfg, const DeflationOptions& opts, const SupportPredicate& supported,
                         Solve solve)
{
    if (!(c > 0 && c < 1)) throw std::invalid_argument("admission control: c must lie in (0, 1)");
    if (samples.N < 1 || samples.K() != inst.K) throw std::invalid_argument("admission control: bad samples");

    AdmissionOutcome out;
    LinkSet active = all_links(inst.K);
    PowerProfile warm;
    bool have_warm = false;

    // Step 2: remove the worst link until the remainder is supported.
    while (!active.empty() && !supported(active)) {
        const auto prob = normalize(inst, samples, c, active, opts.mode);
        const auto res = solve(prob, cfg, have_warm ? &warm : nullptr);
        ++out.solver_stats.solves;
        out.solver_stats.total_iterations += res.iterations;
        if (!res.converged) ++out.solver_stats.nonconverged;

        PowerProfile qbar = res.q;
        if (qbar.N() != prob.N) qbar.q = res.q.q.replicate(1, prob.N);
        const auto removal = removal_rule(prob, qbar, opts.noise);
        out.removal_trace.push_back(removal);

        const auto local = static_cast<int>(std::find(active.begin(), active.end(), removal.link) - active.begin());
        active.erase(active.begin() + local);
        if (opts.warm_start && !active.empty()) {
            warm = without_row(res.q, local);
            have_warm = true;
        }
    }

    // Step 3: readmit removed links, last removed first.
    for (auto it = out.removal_trace.rbegin(); it != out.removal_trace.rend(); ++it) {
        auto candidate = with_link(active, it->link);
        if (supported(candidate)) {
            active = std::move(candidate);
            out.readmitted.push_back(it->link);
        }
    }
    std::sort(out.readmitted.begin(), out.readmitted.end());
    out.supported = std::move(active);
    if (out.supported.empty()) out.diagnostic = "no single link is supportable";
    return out;
}

void fill_adaptive_power(const NetworkInstance& inst, const GainSampleSet& samples, AdmissionOutcome& out)
{
    const auto m = static_cast<Eigen::Index>(out.supported.size());
    out.per_sample_pmin.resize(samples.N, m);
    out.final_q.q.resize(m, samples.N);
    Eigen::VectorXd p;
    for (int n = 0; n < samples.N; ++n) {
        if (m == 0) continue;
        if (!feasible_fast(inst, samples.gains[static_cast<std::size_t>(n)], out.supported, &p))
            throw std::logic_error("admission control returned an unsupported set");
        out.per_sample_pmin.row(n) = p.transpose();
        for (Eigen::Index a = 0; a < m; ++a) out.final_q.q(a, n) = p(a) / inst.pbar(out.supported[a]);
    }
}

} // namespace

Removal removal_rule(const NormalizedProblem& prob, const PowerProfile& qbar, NoiseTerm noise)
{
    if (prob.K == 0) throw std::invalid_argument("removal_rule: empty link set");
    if (qbar.K() != prob.K || qbar.N() != prob.N) throw std::invalid_argument("removal_rule: q shape mismatch");

    const int K = prob.K;
    std::vector<int> worst(static_cast<std::size_t>(K), 0);
    std::vector<double> violation(static_cast<std::size_t>(K), 0.0);
    for (int k = 0; k < K; ++k) {
        double best = -std::numeric_limits<double>::infinity();
        for (int n = 0; n < prob.N; ++n) {
            const double v = prob.c(k, n) - prob.a[static_cast<std::size_t>(n)].row(k).dot(qbar.q.col(n));
            if (v > best) {
                best = v;
                worst[static_cast<std::size_t>(k)] = n;
            }
        }
        violation[static_cast<std::size_t>(k)] = best;
    }

    Removal pick;
    int pick_local = -1;
    for (int k = 0; k < K; ++k) {
        const int nk = worst[static_cast<std::size_t>(k)];
        const auto& ak = prob.a[static_cast<std::size_t>(nk)];
        double score = noise == NoiseTerm::raw ? prob.eta(k) : prob.c(k, nk);
        for (int j = 0; j < K; ++j) {
            if (j == k) continue;
            score += std::abs(ak(k, j)) * qbar.q(j, nk);
            const int nj = worst[static_cast<std::size_t>(j)];
            score += std::abs(prob.a[static_cast<std::size_t>(nj)](j, k)) * qbar.q(k, nj);
        }
        const double viol = violation[static_cast<std::size_t>(k)];
        const bool better = pick_local < 0 || score > pick.score ||
                            (score == pick.score && viol > pick.violation);
        if (better) {
            pick = {prob.links[static_cast<std::size_t>(k)], score, viol};
            pick_local = k;
        }
    }
    return pick;
}

AdmissionOutcome admission_control(const NetworkInstance& inst, const GainSampleSet& samples, double c,
                                   const SolverConfig& cfg, const DeflationOptions& opts)
{
    auto out = deflate(
        inst, samples, c, cfg, opts, [&](const LinkSet& s) { return supported_exact(inst, samples, s); },
        &solve_group_norm);
    fill_adaptive_power(inst, samples, out);
    return out;
}

AdmissionOutcome admission_control_constant_power(const NetworkInstance& inst, const GainSampleSet& samples, double c,
                                                  const SolverConfig& cfg, const DeflationOptions& opts)
{
    auto out = deflate(
        inst, samples, c, cfg, opts, [&](const LinkSet& s) { return supported_constant(inst, samples, s); },
        &solve_group_norm_shared);

    const auto m = static_cast<Eigen::Index>(out.supported.size());
    Eigen::VectorXd p;
    if (!supported_constant(inst, samples, out.supported, &p))
        throw std::logic_error("constant-power admission returned an unsupported set");
    out.final_q.q.resize(m, 1);
    for (Eigen::Index a = 0; a < m; ++a) out.final_q.q(a, 0) = p(a) / inst.pbar(out.supported[a]);
    out.per_sample_pmin = p.transpose().replicate(samples.N, 1);
    return out;
}

AdmissionOutcome perfect_csi_benchmark(const NetworkInstance& inst, const Eigen::MatrixXd& gain, double c,
                                       const SolverConfig& cfg, const DeflationOptions& opts)
{
    GainSampleSet single;
    single.N = 1;
    single.gains = {gain};
    single.validate();
    return admission_control(inst, single, c, cfg, opts);
}

int max_admissible_size(const NetworkInstance& inst, const GainSampleSet& samples)
{
    if (inst.K > 20) throw std::invalid_argument("max_admissible_size: K too large for enumeration");
    int best = 0;
    LinkSet s;
    for (unsigned mask = 1; mask < (1u << inst.K); ++mask) {
        const int size = std::popcount(mask);
        if (size <= best) continue;
        s.clear();
        for (int k = 0; k < inst.K; ++k)
            if (mask & (1u << k)) s.push_back(k);
        if (supported_exact(inst, samples, s)) best = size;
    }
    return best;
}

} // namespace jpac
