#include <jpac/timescale.hpp>
#include <jpac/linalg.hpp>

#include <fstream>
#include <stdexcept>

namespace jpac {

namespace {

constexpr double kSinrSlack = 1e-6;

void finish(TwoTimescaleReport& rep, double power_sum)
{
    rep.trials = static_cast<int>(rep.records.size());
    rep.outage_ratio = rep.trials > 0 ? static_cast<double>(rep.outage_count) / rep.trials : 0.0;
    const int ok = rep.trials - rep.outage_count;
    rep.avg_total_power = ok > 0 ? power_sum / ok : 0.0;
}

} // namespace

FMTrace fm_power_control(const NetworkInstance& inst, const Eigen::MatrixXd& gain, std::span<const int> subset,
                         const Eigen::VectorXd& p_init, const FmOptions& opts)
{
    const auto m = static_cast<Eigen::Index>(subset.size());
    if (m == 0) throw std::invalid_argument("fm_power_control: empty link set");
    if (p_init.size() != m) throw std::invalid_argument("fm_power_control: p_init size mismatch");

    Eigen::VectorXd cap(m), scale(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const int k = subset[static_cast<std::size_t>(a)];
        cap(a) = inst.pbar(k);
        scale(a) = inst.gamma(k) / gain(k, k);
        if (!(p_init(a) >= 0) || p_init(a) > cap(a)) throw std::invalid_argument("fm_power_control: p_init outside [0, pbar]");
    }

    FMTrace tr;
    Eigen::VectorXd p = p_init, next(m);
    if (opts.keep_iterates) tr.iterates.push_back(p);
    bool stationary = false;
    for (int it = 0; it < opts.max_iters; ++it) {
        // gamma_k p_k / SINR_k = gamma_k (eta_k + interference_k) / g_kk, defined even at p_k = 0.
        for (Eigen::Index a = 0; a < m; ++a) {
            const int k = subset[static_cast<std::size_t>(a)];
            double interference = inst.eta(k);
            for (Eigen::Index b = 0; b < m; ++b)
                if (b != a) interference += gain(k, subset[static_cast<std::size_t>(b)]) * p(b);
            next(a) = std::min(cap(a), scale(a) * interference);
        }
        const double step = (next - p).cwiseAbs().maxCoeff();
        p.swap(next);
        tr.iterations = it + 1;
        if (opts.keep_iterates) tr.iterates.push_back(p);
        if (step <= opts.tol * p.cwiseAbs().maxCoeff()) {
            stationary = true;
            break;
        }
    }
    tr.final_sinr = sinr(gain, inst.eta, subset, p);
    bool targets_met = true;
    for (Eigen::Index a = 0; a < m; ++a)
        targets_met = targets_met && tr.final_sinr(a) >= inst.gamma(subset[static_cast<std::size_t>(a)]) - kSinrSlack;
    tr.converged = stationary && targets_met;
    tr.power = std::move(p);
    return tr;
}

TwoTimescaleReport run_two_timescale(const NetworkInstance& inst, std::span<const int> supported, int T,
                                     std::uint64_t rng_seed, const FmOptions& opts)
{
    if (T < 1) throw std::invalid_argument("run_two_timescale: T must be positive");
    TwoTimescaleReport rep;
    rep.records.reserve(static_cast<std::size_t>(T));
    if (supported.empty()) {
        for (int t = 0; t < T; ++t) rep.records.push_back({t, false, 0.0, 0});
        finish(rep, 0.0);
        return rep;
    }

    const auto draws = sample_gains(inst, T, rng_seed);
    const auto m = static_cast<Eigen::Index>(supported.size());
    Eigen::VectorXd p(m);
    for (Eigen::Index a = 0; a < m; ++a) p(a) = 0.5 * inst.pbar(supported[static_cast<std::size_t>(a)]);

    double power_sum = 0.0;
    for (int t = 0; t < T; ++t) {
        const auto& g = draws.gains[static_cast<std::size_t>(t)];
        const bool outage = !feasible_fast(inst, g, supported);
        const auto fm = fm_power_control(inst, g, supported, p, opts);
        if (fm.converged == outage) ++rep.detector_disagreements;
        p = fm.power;

        TrialRecord rec{t, outage, outage ? 0.0 : fm.power.sum(), fm.iterations};
        if (outage) ++rep.outage_count;
        else power_sum += rec.total_power;
        rep.records.push_back(rec);
    }
    finish(rep, power_sum);
    return rep;
}

TwoTimescaleReport run_constant_power(const NetworkInstance& inst, std::span<const int> supported,
                                      const Eigen::VectorXd& power, int T, std::uint64_t rng_seed)
{
    if (T < 1) throw std::invalid_argument("run_constant_power: T must be positive");
    if (power.size() != static_cast<Eigen::Index>(supported.size()))
        throw std::invalid_argument("run_constant_power: power size mismatch");
    TwoTimescaleReport rep;
    rep.records.reserve(static_cast<std::size_t>(T));
    if (supported.empty()) {
        for (int t = 0; t < T; ++t) rep.records.push_back({t, false, 0.0, 0});
        finish(rep, 0.0);
        return rep;
    }

    const auto draws = sample_gains(inst, T, rng_seed);
    const double total = power.sum();
    double power_sum = 0.0;
    for (int t = 0; t < T; ++t) {
        const auto s = sinr(draws.gains[static_cast<std::size_t>(t)], inst.eta, supported, power);
        bool outage = false;
        for (std::size_t a = 0; a < supported.size(); ++a)
            outage = outage || s(static_cast<Eigen::Index>(a)) < inst.gamma(supported[a]) * (1.0 - 1e-9);
        if (outage) ++rep.outage_count;
        else power_sum += total;
        rep.records.push_back({t, outage, outage ? 0.0 : total, 0});
    }
    finish(rep, power_sum);
    return rep;
}

void write_trials_csv(const TwoTimescaleReport& report, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open trial file: " + path);
    os.precision(17);
    os << "trial,outage,total_power,fm_iterations\n";
    for (const auto& r : report.records)
        os << r.trial << ',' << (r.outage ? 1 : 0) << ',' << r.total_power << ',' << r.fm_iterations << '\n';
}

} // namespace jpac
