#include <jpac/netmodel.hpp>
#include <jpac/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace jpac {

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok) throw std::invalid_argument(what);
}

int clamp_count(double n)
{
    if (!(n <= static_cast<double>(std::numeric_limits<int>::max())))
        throw std::overflow_error("sample size does not fit in an int");
    return std::max(1, static_cast<int>(n));
}

} // namespace

void NetworkInstance::validate() const
{
    require(K >= 1, "instance: K must be positive");
    require(gamma.size() == K && eta.size() == K && pbar.size() == K, "instance: vector sizes must equal K");
    require(dist.rows() == K && dist.cols() == K, "instance: dist must be K x K");
    require((gamma.array() > 0).all(), "instance: gamma must be positive");
    require((eta.array() > 0).all(), "instance: eta must be positive");
    require((pbar.array() > 0).all(), "instance: pbar must be positive");
    require((dist.array() > 0).all() && dist.allFinite(), "instance: distances must be positive and finite");
    require(kappa >= 0 && !std::isnan(kappa), "instance: kappa must be nonnegative");
    require(tx_pos.has_value() == rx_pos.has_value(), "instance: tx_pos and rx_pos must be given together");
    if (tx_pos) {
        require(tx_pos->cols() == K && rx_pos->cols() == K, "instance: position arrays must have K columns");
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < K; ++j) {
                const double d = (rx_pos->col(k) - tx_pos->col(j)).norm();
                require(std::abs(d - dist(k, j)) <= 1e-9 * std::max(1.0, d),
                        "instance: dist inconsistent with positions");
            }
    }
}

void GainSampleSet::validate() const
{
    require(N >= 1 && static_cast<int>(gains.size()) == N, "samples: N must match the number of matrices");
    const auto K = this->K();
    for (const auto& g : gains) {
        require(g.rows() == K && g.cols() == K, "samples: all matrices must be K x K");
        require(g.allFinite() && (g.array() >= 0).all(), "samples: gains must be finite and nonnegative");
        require((g.diagonal().array() > 0).all(), "samples: direct gains must be positive");
    }
}

NetworkInstance make_instance(Eigen::MatrixXd dist, Eigen::VectorXd gamma, Eigen::VectorXd eta,
                              Eigen::VectorXd pbar, double kappa)
{
    NetworkInstance inst;
    inst.K = static_cast<int>(dist.rows());
    inst.dist = std::move(dist);
    inst.gamma = std::move(gamma);
    inst.eta = std::move(eta);
    inst.pbar = std::move(pbar);
    inst.kappa = kappa;
    inst.validate();
    return inst;
}

NetworkInstance generate_instance(int K, std::uint64_t rng_seed, const GeometryConfig& geometry)
{
    require(K >= 1, "generate_instance: K must be positive");
    require(geometry.square_side_km > 0 && geometry.rx_min_radius_m >= 0 &&
                geometry.rx_max_radius_m > geometry.rx_min_radius_m,
            "generate_instance: geometry bounds must be positive and ordered");
    require(geometry.budget_factor > 0, "generate_instance: budget factor must be positive");

    RandomStream rng(rng_seed, {0x6e6574ULL});
    const double side = geometry.square_side_km * 1000.0;
    const double r0 = geometry.rx_min_radius_m;
    const double r1 = geometry.rx_max_radius_m;

    NetworkInstance inst;
    inst.K = K;
    Eigen::Matrix2Xd tx(2, K), rx(2, K);
    for (int k = 0; k < K; ++k) {
        tx(0, k) = rng.uniform(0.0, side);
        tx(1, k) = rng.uniform(0.0, side);
        // Rejection from the bounding square yields a uniform density over the annulus area.
        double dx = 0.0, dy = 0.0, rr = 0.0;
        do {
            dx = rng.uniform(-r1, r1);
            dy = rng.uniform(-r1, r1);
            rr = std::hypot(dx, dy);
        } while (rr < r0 || rr > r1);
        rx(0, k) = tx(0, k) + dx;
        rx(1, k) = tx(1, k) + dy;
    }

    inst.dist.resize(K, K);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < K; ++j)
            inst.dist(k, j) = (rx.col(k) - tx.col(j)).norm();

    inst.tx_pos = std::move(tx);
    inst.rx_pos = std::move(rx);
    inst.gamma = Eigen::VectorXd::Constant(K, db_to_linear(geometry.gamma_db));
    inst.eta = Eigen::VectorXd::Constant(K, db_to_linear(geometry.eta_db));
    inst.kappa = geometry.kappa;

    // Minimum interference-free power at kappa = inf, where g_kk = d_kk^-4.
    inst.pbar.resize(K);
    for (int k = 0; k < K; ++k)
        inst.pbar(k) = geometry.budget_factor * inst.gamma(k) * inst.eta(k) * std::pow(inst.dist(k, k), 4);

    inst.validate();
    return inst;
}

double rician_gain(double kappa, double d, RandomStream& rng)
{
    const double path = 1.0 / (d * d * d * d);
    if (std::isinf(kappa)) return path;
    const double los = std::sqrt(kappa / (kappa + 1.0));
    const double scatter = std::sqrt(1.0 / (kappa + 1.0)) * std::numbers::sqrt2 / 2.0;
    const double re = los + scatter * rng.normal();
    const double im = scatter * rng.normal();
    return (re * re + im * im) * path;
}

GainSampleSet sample_gains(const NetworkInstance& inst, int N, std::uint64_t rng_seed)
{
    require(N >= 1, "sample_gains: N must be positive");
    inst.validate();

    GainSampleSet out;
    out.N = N;
    out.seed = SeedRecord{rng_seed, {0x676169ULL}};
    out.gains.reserve(N);
    const RandomStream root(rng_seed, {0x676169ULL});
    for (int n = 0; n < N; ++n) {
        auto rng = root.split(static_cast<std::uint64_t>(n));
        Eigen::MatrixXd g(inst.K, inst.K);
        for (int k = 0; k < inst.K; ++k)
            for (int j = 0; j < inst.K; ++j) {
                double v = rician_gain(inst.kappa, inst.dist(k, j), rng);
                // A zero direct gain has probability zero; redraw it.
                while (k == j && !(v > 0)) v = rician_gain(inst.kappa, inst.dist(k, j), rng);
                g(k, j) = v;
            }
        out.gains.push_back(std::move(g));
    }
    return out;
}

int sample_size_constant_power(int K, double eps, double delta)
{
    if (K < 1) throw std::domain_error("sample_size_constant_power: K must be positive");
    if (!(eps > 0 && eps < 1) || !(delta > 0 && delta < 1))
        throw std::domain_error("sample_size_constant_power: eps and delta must lie in (0, 1)");
    const double L = std::log(1.0 / delta);
    const double km1 = static_cast<double>(K - 1);
    return clamp_count(std::ceil((km1 + L + std::sqrt(2.0 * km1 * L + L * L)) / eps));
}

int sample_size_adaptive_power(double eps, double delta)
{
    if (!(eps > 0 && eps < 1) || !(delta > 0 && delta < 1))
        throw std::domain_error("sample_size_adaptive_power: eps and delta must lie in (0, 1)");
    return clamp_count(std::ceil(-2.0 / (eps * eps * std::log(delta))));
}

} // namespace jpac
