#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "accum/poisson_binomial.hpp"
#include "accum/survival.hpp"

namespace accum {

/// E(K_1), ..., E(K_n) under fixed parameters.
std::vector<double> rarefaction(const SurvivalParams& p, std::size_t n);

struct ExtrapolationResult {
    std::size_t horizon = 0;
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.0;
    // Law of the number of new discoveries K_m^(n) (not shifted by k).
    std::optional<PoissonBinomial> distribution;
};

/// Predictive law of K_{n+m} given n observations with k distinct entities:
/// k plus a Poisson-binomial sum over S(n), ..., S(n + m - 1). The interval
/// holds the (1 - level)/2 and (1 + level)/2 quantiles.
ExtrapolationResult extrapolate(const SurvivalParams& p, std::size_t n, std::size_t k,
                                std::size_t m, double level = 0.95);

struct BandOptions {
    std::size_t sims_per_draw = 2000;
    // Draws beyond this count are thinned evenly; 0 keeps all of them.
    std::size_t max_draws = 0;
    std::uint64_t seed = 0;
};

struct BandPoint {
    std::size_t horizon = 0;
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Posterior predictive band for K_{n+m} at each horizon: every retained draw
/// contributes sims_per_draw simulated paths and the pooled sample gives the
/// mean and equal-tailed quantiles. Horizons may come in any order; the
/// result follows the input order.
std::vector<BandPoint> predictive_band(std::span<const SurvivalParams> draws, std::size_t n,
                                       std::size_t k, std::span<const std::size_t> horizons,
                                       double level = 0.95, const BandOptions& opts = {});

struct DrawSummary {
    double mean = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
    std::size_t count = 0;
};

struct RichnessReport {
    bool infinite = false;
    // Set when infinite: why the richness has no finite mean.
    std::string explanation;
    // k + sum_{t >= n} S(t); +inf when infinite.
    double richness = 0.0;
    // k + integral_n^inf S and that plus S(n).
    double lower = 0.0;
    double upper = 0.0;
    // Midpoint of the bounds.
    double approx = 0.0;
    // Variance of the number of future discoveries, sum_{t >= n} S(t)(1 - S(t)).
    double variance = 0.0;
    // Posterior mean of k / K_inf per draw (equals plugin for one parameter set).
    std::optional<double> saturation;
    // k / richness.
    std::optional<double> saturation_plugin;
    std::optional<DrawSummary> draws_summary;
};

constexpr double kDefaultTailTol = 1e-12;

/// Expected richness k + sum_{j >= 1} S(j + n - 1). Infinite-regime
/// parameters give a report flagged infinite rather than an exception.
RichnessReport richness(const SurvivalParams& p, std::size_t n, std::size_t k,
                        double tail_tol = kDefaultTailTol);
RichnessReport richness(std::span<const SurvivalParams> draws, std::size_t n, std::size_t k,
                        double tail_tol = kDefaultTailTol);

/// Saturation k / K_inf. Throws RegimeError when richness is infinite.
double saturation(const SurvivalParams& p, std::size_t n, std::size_t k);
double saturation(std::span<const SurvivalParams> draws, std::size_t n, std::size_t k);

/// Smallest m with E(K_{n+m}) / E(K_inf) >= target; 0 when the current
/// saturation already reaches the target. The draws overload uses posterior
/// means of both quantities.
std::size_t required_m(const SurvivalParams& p, std::size_t n, std::size_t k, double target);
std::size_t required_m(std::span<const SurvivalParams> draws, std::size_t n, std::size_t k,
                       double target);

} // namespace accum
