#include "accum/poisson_binomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "accum/error.hpp"

namespace accum {

namespace {

constexpr double kFlush = 1e-300;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b)
{
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log(i^(1 - sigma) phi^(-i)); -inf at i = 0.
double log_weight(std::size_t i, double sigma, double phi)
{
    if (i == 0) {
        return kNegInf;
    }
    const double x = static_cast<double>(i);
    return (1.0 - sigma) * std::log(x) - x * std::log(phi);
}

void check_sigma_phi(double sigma, double phi)
{
    if (!(sigma < 1.0) || !std::isfinite(sigma)) {
        throw DomainError("sigma must be finite and below 1");
    }
    if (!(phi > 0.0 && phi <= 1.0)) {
        throw DomainError("phi must lie in (0, 1]");
    }
}

// Advance a log-coefficient row from m to m + 1 in place; row has room for m + 2.
void advance_row(std::vector<double>& row, std::size_t m, double sigma, double phi)
{
    const double w = log_weight(m, sigma, phi);
    row[m + 1] = row[m];
    for (std::size_t k = m; k >= 1; --k) {
        row[k] = log_add(row[k - 1], w + row[k]);
    }
    row[0] = w + row[0];
    if (m == 0) {
        row[0] = kNegInf;
    }
}

} // namespace

PoissonBinomial::PoissonBinomial(std::span<const double> probs)
{
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DomainError("Poisson-binomial probabilities must lie in [0, 1]");
        }
        mean_ += p;
        variance_ += p * (1.0 - p);
    }
    const std::size_t n = probs.size();
    pmf_.assign(n + 1, 0.0);
    pmf_[0] = 1.0;
    // Support is tracked as [lo, hi]; entries that fall below the flush level
    // at either edge are dropped so wide convolutions stay banded.
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (double p : probs) {
        const double q = 1.0 - p;
        pmf_[hi + 1] = pmf_[hi] * p;
        for (std::size_t k = hi; k > lo; --k) {
            pmf_[k] = pmf_[k] * q + pmf_[k - 1] * p;
        }
        pmf_[lo] *= q;
        ++hi;
        while (lo < hi && pmf_[lo] < kFlush) {
            pmf_[lo++] = 0.0;
        }
        while (hi > lo && pmf_[hi] < kFlush) {
            pmf_[hi--] = 0.0;
        }
    }
    const double total = std::accumulate(pmf_.begin(), pmf_.end(), 0.0);
    for (auto& v : pmf_) {
        v /= total;
        if (v < kFlush) {
            v = 0.0;
        }
    }
    cdf_.resize(n + 1);
    std::partial_sum(pmf_.begin(), pmf_.end(), cdf_.begin());
}

double PoissonBinomial::cdf(std::size_t k) const
{
    return k < cdf_.size() ? std::min(cdf_[k], 1.0) : 1.0;
}

std::size_t PoissonBinomial::quantile(double q) const
{
    if (!(q >= 0.0 && q <= 1.0)) {
        throw DomainError("quantile level must lie in [0, 1]");
    }
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), q);
    if (it == cdf_.end()) {
        // q within rounding of 1: the top of the support.
        return static_cast<std::size_t>(
            std::find_if(pmf_.rbegin(), pmf_.rend(), [](double v) { return v > 0.0; }).base() -
            pmf_.begin() - 1);
    }
    return static_cast<std::size_t>(it - cdf_.begin());
}

std::size_t PoissonBinomial::sample(Rng& rng) const
{
    return quantile(rng.uniform_open());
}

PoissonBinomial pb_distribution(std::span<const double> probs)
{
    return PoissonBinomial(probs);
}

LogCoefficientTable::LogCoefficientTable(std::size_t n, double sigma, double phi)
    : n_(n), sigma_(sigma), phi_(phi)
{
    check_sigma_phi(sigma, phi);
    values_.assign((n + 1) * (n + 2) / 2, kNegInf);
    std::vector<double> row(n + 2, kNegInf);
    row[0] = 0.0;
    values_[0] = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        advance_row(row, m, sigma, phi);
        std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(m + 2),
                  values_.begin() + static_cast<std::ptrdiff_t>((m + 1) * (m + 2) / 2));
    }
}

double LogCoefficientTable::log_value(std::size_t m, std::size_t k) const
{
    if (m > n_) {
        throw DomainError("coefficient row beyond table size");
    }
    if (k > m) {
        return kNegInf;
    }
    return values_[m * (m + 1) / 2 + k];
}

std::span<const double> LogCoefficientTable::row(std::size_t m) const
{
    if (m > n_) {
        throw DomainError("coefficient row beyond table size");
    }
    return std::span<const double>(values_).subspan(m * (m + 1) / 2, m + 1);
}

LogCoefficientTable coefficient_table(std::size_t n, double sigma, double phi, std::size_t cap)
{
    if (n > cap) {
        throw DomainError("coefficient table of size " + std::to_string(n) +
                          " exceeds the cap " + std::to_string(cap) +
                          "; use the convolution pmf");
    }
    return LogCoefficientTable(n, sigma, phi);
}

std::vector<double> kn_pmf_via_coefficients(std::size_t n, const SurvivalParams& p, std::size_t cap)
{
    if (n == 0) {
        throw DomainError("kn_pmf_via_coefficients requires n >= 1");
    }
    if (n > cap) {
        throw DomainError("n exceeds the coefficient-path cap; use the convolution pmf");
    }
    const double sigma = p.sigma();
    const double phi = p.phi();
    const double log_alpha = std::log(p.alpha());
    std::vector<double> row(n + 2, kNegInf);
    row[0] = 0.0;
    double log_norm = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        advance_row(row, m, sigma, phi);
        log_norm += log_add(log_alpha, log_weight(m, sigma, phi));
    }
    std::vector<double> pmf(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        pmf[k] = std::exp(static_cast<double>(k) * log_alpha + row[k] - log_norm);
    }
    return pmf;
}

std::pair<double, double> normal_approx_interval(const SurvivalParams& p, std::size_t n, double level)
{
    if (n == 0) {
        throw DomainError("normal_approx_interval requires n >= 1");
    }
    if (!(level >= 0.5 && level < 1.0)) {
        throw DomainError("level must lie in [0.5, 1)");
    }
    if (classify_regime(p).regime != Regime::InfiniteRichness) {
        throw RegimeError("normal approximation requires infinite richness; "
                          "no central limit theorem holds for finite richness");
    }
    double mean = 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = survival(p, static_cast<double>(i));
        mean += s;
        var += s * (1.0 - s);
    }
    const double z = boost::math::quantile(boost::math::normal(), level);
    const double half = z * std::sqrt(var);
    return {mean - half, mean + half};
}

} // namespace accum
