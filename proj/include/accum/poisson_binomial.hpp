#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "accum/rng.hpp"
#include "accum/survival.hpp"

namespace accum {

/// Distribution of a sum of independent Bernoulli(pi_i) variables. The pmf is
/// built once by iterative convolution; entries below 1e-300 are flushed to 0.
class PoissonBinomial {
public:
    explicit PoissonBinomial(std::span<const double> probs);

    std::size_t trials() const { return pmf_.size() - 1; }
    std::span<const double> pmf() const { return pmf_; }
    double probability(std::size_t k) const { return k < pmf_.size() ? pmf_[k] : 0.0; }
    double cdf(std::size_t k) const;
    // Smallest k with cdf(k) >= q.
    std::size_t quantile(double q) const;
    // Moment formulas sum(pi) and sum(pi (1 - pi)).
    double mean() const { return mean_; }
    double variance() const { return variance_; }
    // Inverse-cdf draw.
    std::size_t sample(Rng& rng) const;

private:
    std::vector<double> pmf_;
    std::vector<double> cdf_;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

PoissonBinomial pb_distribution(std::span<const double> probs);

/// log C_{m,k}(sigma, phi) for 0 <= k <= m <= n, where C are the coefficients of
///   prod_{i=0}^{m-1} (alpha + i^(1-sigma) phi^(-i)) = sum_k alpha^k C_{m,k}.
/// Zero coefficients are stored as -inf.
class LogCoefficientTable {
public:
    LogCoefficientTable(std::size_t n, double sigma, double phi);

    std::size_t n() const { return n_; }
    double sigma() const { return sigma_; }
    double phi() const { return phi_; }
    // log C_{m,k}; -inf for k > m or (k = 0, m >= 1).
    double log_value(std::size_t m, std::size_t k) const;
    std::span<const double> row(std::size_t m) const;

private:
    std::size_t n_;
    double sigma_;
    double phi_;
    std::vector<double> values_;
};

/// Largest table the coefficient path builds unless the caller raises the cap;
/// beyond it the convolution pmf is the authoritative route.
inline constexpr std::size_t kCoefficientCap = 5000;

LogCoefficientTable coefficient_table(std::size_t n, double sigma, double phi,
                                      std::size_t cap = kCoefficientCap);

/// pr(K_n = k), k = 0..n, from
///   alpha^k C_{n,k}(sigma, phi) / prod_{i=0}^{n-1} (alpha + i^(1-sigma) phi^(-i)).
std::vector<double> kn_pmf_via_coefficients(std::size_t n, const SurvivalParams& p,
                                            std::size_t cap = kCoefficientCap);

/// E(K_n) -/+ z sd(K_n) with z the standard-normal quantile at `level`
/// (so level 0.5 gives a zero-width interval). Requires infinite richness.
std::pair<double, double> normal_approx_interval(const SurvivalParams& p, std::size_t n, double level);

} // namespace accum
