#include "accum/polya_gamma.hpp"

#include <cmath>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace accum {

namespace {

constexpr double kTrunc = 0.64;
constexpr double kPi = boost::math::constants::pi<double>();
constexpr double kPi2Over8 = kPi * kPi / 8.0;

double log_norm_cdf(double x)
{
    return std::log(0.5 * boost::math::erfc(-x / std::sqrt(2.0)));
}

// Coefficient a_n(x) of the alternating series for the J*(1, 0) density.
double series_coef(int n, double x)
{
    const double k = n + 0.5;
    if (x > kTrunc) {
        return kPi * k * std::exp(-k * k * kPi * kPi * x / 2.0);
    }
    return std::pow(2.0 / kPi / x, 1.5) * kPi * k * std::exp(-2.0 * k * k / x);
}

// Probability of proposing from the exponential piece on (kTrunc, inf).
double exponential_mass(double z, double fz)
{
    const double rt = std::sqrt(1.0 / kTrunc);
    const double b = rt * (kTrunc * z - 1.0);
    const double a = -rt * (kTrunc * z + 1.0);
    const double x0 = std::log(fz) + fz * kTrunc;
    const double xb = x0 - z + log_norm_cdf(b);
    const double xa = x0 + z + log_norm_cdf(a);
    const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
    return 1.0 / (1.0 + q_over_p);
}

// Inverse-Gaussian(1/z, 1) truncated to (0, kTrunc).
double truncated_inverse_gaussian(double z, Rng& rng)
{
    const double mu = 1.0 / z;
    double x = kTrunc + 1.0;
    if (mu > kTrunc) {
        double accept = 0.0;
        while (rng.uniform() > accept) {
            double e1 = rng.exponential();
            double e2 = rng.exponential();
            while (e1 * e1 > 2.0 * e2 / kTrunc) {
                e1 = rng.exponential();
                e2 = rng.exponential();
            }
            x = kTrunc / ((1.0 + kTrunc * e1) * (1.0 + kTrunc * e1));
            accept = std::exp(-0.5 * z * z * x);
        }
        return x;
    }
    while (x > kTrunc) {
        const double n = rng.normal();
        const double y = n * n;
        x = mu + 0.5 * mu * mu * y - 0.5 * mu * std::sqrt(4.0 * mu * y + (mu * y) * (mu * y));
        if (rng.uniform() > mu / (mu + x)) {
            x = mu * mu / x;
        }
    }
    return x;
}

} // namespace

double sample_pg(double z, Rng& rng)
{
    // PG(1, z) = J*(1, z / 2) / 4.
    z = std::abs(z) * 0.5;
    const double fz = kPi2Over8 + z * z / 2.0;
    const double p_exp = exponential_mass(z, fz);
    while (true) {
        double x;
        if (rng.uniform() < p_exp) {
            x = kTrunc + rng.exponential() / fz;
        } else {
            x = truncated_inverse_gaussian(z, rng);
        }
        double s = series_coef(0, x);
        const double y = rng.uniform() * s;
        for (int n = 1;; ++n) {
            if (n % 2 == 1) {
                s -= series_coef(n, x);
                if (y <= s) {
                    return 0.25 * x;
                }
            } else {
                s += series_coef(n, x);
                if (y > s) {
                    break;
                }
            }
        }
    }
}

double pg_mean(double z)
{
    z = std::abs(z);
    if (z < 1e-6) {
        return 0.25 - z * z / 48.0;
    }
    return std::tanh(z / 2.0) / (2.0 * z);
}

double pg_variance(double z)
{
    z = std::abs(z);
    if (z < 1e-3) {
        return 1.0 / 24.0 - z * z / 120.0;
    }
    const double c = std::cosh(z / 2.0);
    return (std::sinh(z) - z) / (4.0 * z * z * z * c * c);
}

} // namespace accum
