#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "lassodof/errors.hpp"
#include "lassodof/geometry.hpp"
#include "lassodof/linalg.hpp"

namespace lassodof {

/// y ~ N(mu, sigma^2 I)
struct GaussianModel {
    Vec mu;
    double sigma = 1.0;

    void validate() const
    {
        if (mu.size() < 1) throw InputError("mean vector must be nonempty");
        if (!mu.allFinite()) throw InputError("mean vector has non-finite entries");
        if (!std::isfinite(sigma) || !(sigma > 0.0)) throw InputError("sigma must be positive");
    }
};

struct McConfig {
    long replications = 2000;
    std::uint64_t seed = 0;
    // 0 means hardware concurrency; LASSODOF_THREADS caps either way.
    int parallel_width = 0;

    void validate() const
    {
        if (replications < 2) throw InputError("Monte Carlo needs at least two replications");
        if (parallel_width < 0) throw InputError("parallel width must be nonnegative");
    }
};

struct McDfEstimate {
    double df_mean = 0.0;
    double df_std_error = 0.0;
    long replications_used = 0;
    long replications_dropped = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline int effective_width(int requested)
{
    int width = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("LASSODOF_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) width = std::min(width, cap);
    }
    return std::max(width, 1);
}

/// Runs body(i) for i in [0, count) on up to `width` threads. Exceptions are
/// captured per index; the returned flags mark failed indices.
template <class Body>
std::vector<char> parallel_indices(long count, int width, Body&& body)
{
    std::vector<char> failed(static_cast<std::size_t>(count), 0);
    std::atomic<long> next{0};
    auto worker = [&] {
        for (long i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (const std::exception&) {
                failed[static_cast<std::size_t>(i)] = 1;
            }
        }
    };
    const int threads = static_cast<int>(std::min<long>(width, std::max<long>(count, 1)));
    if (threads <= 1) {
        worker();
        return failed;
    }
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    pool.clear();
    return failed;
}

inline McDfEstimate mean_and_error(const std::vector<double>& terms, const std::vector<char>& failed)
{
    McDfEstimate est;
    double sum = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (failed[i]) {
            ++est.replications_dropped;
            continue;
        }
        sum += terms[i];
        ++est.replications_used;
    }
    if (est.replications_used == 0) return est;
    est.df_mean = sum / static_cast<double>(est.replications_used);
    double ss = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (!failed[i]) ss += (terms[i] - est.df_mean) * (terms[i] - est.df_mean);
    }
    if (est.replications_used > 1) {
        const double var = ss / static_cast<double>(est.replications_used - 1);
        est.df_std_error = std::sqrt(var / static_cast<double>(est.replications_used));
    }
    return est;
}

inline void check_drop_rate(long dropped, long total)
{
    if (static_cast<double>(dropped) > 0.01 * static_cast<double>(total)) {
        throw Error("Monte Carlo harness dropped " + std::to_string(dropped) + " of " + std::to_string(total) +
                    " replications");
    }
}

} // namespace detail

/// Replication r's response: an independent, reproducible stream keyed by (seed, r).
inline Vec draw_response(const GaussianModel& model, std::uint64_t seed, long replication)
{
    std::mt19937_64 rng(detail::splitmix64(detail::splitmix64(seed) ^ static_cast<std::uint64_t>(replication)));
    std::normal_distribution<double> N;
    Vec y(model.mu.size());
    for (Index i = 0; i < y.size(); ++i) y(i) = model.mu(i) + model.sigma * N(rng);
    return y;
}

/**
 * Covariance definition of degrees of freedom with known mean:
 * (1 / (sigma^2 R)) sum_r <g(y_r), y_r - mu>. Failed replications are dropped;
 * more than 1% dropped is an error.
 */
template <FitMap F>
McDfEstimate mc_df_covariance(const F& fit_map, const GaussianModel& model, const McConfig& cfg)
{
    model.validate();
    cfg.validate();
    std::vector<double> terms(static_cast<std::size_t>(cfg.replications), 0.0);
    const double s2 = model.sigma * model.sigma;
    const auto failed = detail::parallel_indices(cfg.replications, detail::effective_width(cfg.parallel_width),
                                                 [&](long r) {
                                                     const Vec y = draw_response(model, cfg.seed, r);
                                                     const Vec g = fit_map(y);
                                                     terms[static_cast<std::size_t>(r)] = g.dot(y - model.mu) / s2;
                                                 });
    const McDfEstimate est = detail::mean_and_error(terms, failed);
    detail::check_drop_rate(est.replications_dropped, cfg.replications);
    return est;
}

/// ||fit - y||^2 - n sigma^2 + 2 sigma^2 df_hat
inline double sure_risk(const Vec& y, const Vec& fit, double df_hat, double sigma)
{
    if (y.size() != fit.size()) throw InputError("fit and response lengths differ");
    const double s2 = sigma * sigma;
    return (fit - y).squaredNorm() - static_cast<double>(y.size()) * s2 + 2.0 * s2 * df_hat;
}

inline double default_fd_step(const Vec& y, double sigma) { return 1e-4 * sigma * (1.0 + y.lpNorm<Eigen::Infinity>()); }

/// Central-difference divergence sum_i (g_i(y + h e_i) - g_i(y - h e_i)) / 2h; 2n fit evaluations.
template <FitMap F>
double stein_divergence_fd(const F& fit_map, const Vec& y, double h)
{
    if (!(h > 0.0)) throw InputError("finite-difference step must be positive");
    double div = 0.0;
    Vec yp = y, ym = y;
    for (Index i = 0; i < y.size(); ++i) {
        yp(i) = y(i) + h;
        ym(i) = y(i) - h;
        div += (fit_map(yp)(i) - fit_map(ym)(i)) / (2.0 * h);
        yp(i) = y(i);
        ym(i) = y(i);
    }
    return div;
}

/// One fit with its set-based df estimate.
struct FitWithDf {
    Vec fit;
    double df = 0.0;
};

struct ReplicationRecord {
    long replication = 0;
    double df_term = 0.0;   // <g(y), y - mu> / sigma^2
    double df_hat = 0.0;    // set-based estimate at y
    double sure_value = 0.0;
    double loss = 0.0;      // ||g(y) - mu||^2
    bool dropped = false;
};

struct ValidationSummary {
    McDfEstimate covariance;
    McDfEstimate set_based;
    double combined_std_error = 0.0;
    double difference = 0.0;
    double sure_mean = 0.0;
    double risk_mean = 0.0;
    double sure_std_error = 0.0;
    double risk_std_error = 0.0;
    double gate_multiplier = 3.0;
    bool pass = false;
    std::vector<ReplicationRecord> records;
};

/**
 * Unbiasedness experiment over shared draws: the covariance df against the
 * mean of a set-based estimator, gated at `gate` combined standard errors.
 * Also tracks SURE against the realized loss.
 */
template <class Estimator>
    requires requires(const Estimator& e, const Vec& y) {
        { e(y) } -> std::convertible_to<FitWithDf>;
    }
ValidationSummary mc_validate(const Estimator& estimator, const GaussianModel& model, const McConfig& cfg,
                              double gate = 3.0)
{
    model.validate();
    cfg.validate();
    const auto R = static_cast<std::size_t>(cfg.replications);
    std::vector<ReplicationRecord> rec(R);
    const double s2 = model.sigma * model.sigma;
    const auto failed = detail::parallel_indices(cfg.replications, detail::effective_width(cfg.parallel_width),
                                                 [&](long r) {
                                                     const Vec y = draw_response(model, cfg.seed, r);
                                                     const FitWithDf out = estimator(y);
                                                     auto& row = rec[static_cast<std::size_t>(r)];
                                                     row.replication = r;
                                                     row.df_term = out.fit.dot(y - model.mu) / s2;
                                                     row.df_hat = out.df;
                                                     row.sure_value = sure_risk(y, out.fit, out.df, model.sigma);
                                                     row.loss = (out.fit - model.mu).squaredNorm();
                                                 });
    std::vector<double> cov(R), dfh(R), sure(R), loss(R);
    for (std::size_t r = 0; r < R; ++r) {
        rec[r].replication = static_cast<long>(r);
        rec[r].dropped = failed[r] != 0;
        cov[r] = rec[r].df_term;
        dfh[r] = rec[r].df_hat;
        sure[r] = rec[r].sure_value;
        loss[r] = rec[r].loss;
    }
    ValidationSummary s;
    s.covariance = detail::mean_and_error(cov, failed);
    s.set_based = detail::mean_and_error(dfh, failed);
    detail::check_drop_rate(s.covariance.replications_dropped, cfg.replications);
    const McDfEstimate sure_est = detail::mean_and_error(sure, failed);
    const McDfEstimate loss_est = detail::mean_and_error(loss, failed);
    s.sure_mean = sure_est.df_mean;
    s.sure_std_error = sure_est.df_std_error;
    s.risk_mean = loss_est.df_mean;
    s.risk_std_error = loss_est.df_std_error;
    s.combined_std_error = std::hypot(s.covariance.df_std_error, s.set_based.df_std_error);
    s.difference = s.set_based.df_mean - s.covariance.df_mean;
    s.gate_multiplier = gate;
    s.pass = std::abs(s.difference) <= gate * s.combined_std_error;
    s.records = std::move(rec);
    return s;
}

struct RiskPoint {
    double lambda = 0.0;
    double risk = 0.0;
    double df = 0.0;
    bool ok = false;
};

struct LambdaSelection {
    double lambda = 0.0;
    std::size_t index = 0;
    std::vector<RiskPoint> curve;
};

/**
 * SURE-minimizing lambda over an ascending grid. `family(lambda)` returns the
 * fit and its set-based df at the observed y. Grid points whose solve throws
 * are flagged and skipped; ties go to the larger lambda.
 */
template <class Family>
    requires requires(const Family& f, double lambda) {
        { f(lambda) } -> std::convertible_to<FitWithDf>;
    }
LambdaSelection select_lambda(const Family& family, const std::vector<double>& grid, const Vec& y, double sigma)
{
    if (grid.empty()) throw InputError("lambda grid is empty");
    if (!std::is_sorted(grid.begin(), grid.end())) throw InputError("lambda grid must be ascending");
    LambdaSelection sel;
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        RiskPoint pt;
        pt.lambda = grid[k];
        try {
            const FitWithDf out = family(grid[k]);
            pt.df = out.df;
            pt.risk = sure_risk(y, out.fit, out.df, sigma);
            pt.ok = std::isfinite(pt.risk);
        } catch (const Error&) {
            pt.ok = false;
        }
        if (pt.ok && (!best || pt.risk <= sel.curve[*best].risk)) best = k;
        sel.curve.push_back(pt);
    }
    if (!best) throw ConvergenceError("no grid point could be solved", 0, 0.0, 0.0);
    sel.index = *best;
    sel.lambda = grid[*best];
    return sel;
}

} // namespace lassodof
