#include "accum/survival.hpp"

#include <cmath>
#include <limits>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "accum/error.hpp"

namespace accum {

namespace {

constexpr double kSigmaCap = 1.0 - 1e-9;
constexpr double kPhiFloor = 1e-12;
constexpr double kTailSurvival = 1e-12;
constexpr double kQuadratureTol = 1e-12;

double logistic(double eta)
{
    if (eta >= 0.0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

void validate(Family family, double alpha, double sigma, double phi)
{
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw DomainError("alpha must be positive and finite");
    }
    if (!(sigma < 1.0) || !std::isfinite(sigma)) {
        throw DomainError("sigma must be finite and below 1");
    }
    if (!(phi > 0.0 && phi <= 1.0)) {
        throw DomainError("phi must lie in (0, 1]");
    }
    if (family == Family::LL1 && sigma != 0.0) {
        throw DomainError("LL1 fixes sigma = 0");
    }
    if (family != Family::LL3 && phi != 1.0) {
        throw DomainError(std::string(to_string(family)) + " fixes phi = 1");
    }
}

// Integral of S over [a, b], b finite, split at geometric breakpoints so the
// adaptive rule sees the scale where S turns over.
double integrate_finite(const SurvivalParams& p, double a, double b)
{
    if (b <= a) {
        return 0.0;
    }
    auto f = [&p](double t) { return survival(p, t); };
    double total = 0.0;
    double lo = a;
    while (lo < b) {
        double hi = lo < 1.0 ? 1.0 : 2.0 * lo;
        if (hi > b) {
            hi = b;
        }
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, lo, hi, 15, kQuadratureTol, &err);
        lo = hi;
    }
    return total;
}

double ll2_expected_T(double alpha, double sigma)
{
    const double pi = boost::math::constants::pi<double>();
    const double a = 1.0 - sigma;
    return std::pow(alpha, 1.0 / a) * pi / (a * std::sin(pi / a));
}

} // namespace

std::string_view to_string(Family f)
{
    switch (f) {
    case Family::LL1: return "ll1";
    case Family::LL2: return "ll2";
    case Family::LL3: return "ll3";
    }
    return "?";
}

Family family_from_string(std::string_view s)
{
    if (s == "ll1" || s == "LL1" || s == "LL-1") return Family::LL1;
    if (s == "ll2" || s == "LL2" || s == "LL-2") return Family::LL2;
    if (s == "ll3" || s == "LL3" || s == "LL-3") return Family::LL3;
    throw DomainError("unknown family '" + std::string(s) + "'");
}

std::size_t free_coefficients(Family f)
{
    switch (f) {
    case Family::LL1: return 1;
    case Family::LL2: return 2;
    case Family::LL3: return 3;
    }
    return 0;
}

std::string_view to_string(Regime r)
{
    return r == Regime::FiniteRichness ? "finite" : "infinite";
}

SurvivalParams::SurvivalParams(Family family, double alpha, double sigma, double phi)
    : family_(family), alpha_(alpha), sigma_(sigma), phi_(phi),
      beta_{std::log(alpha), sigma - 1.0, std::log(phi)}
{
    validate(family, alpha, sigma, phi);
}

SurvivalParams::SurvivalParams(Family family, double alpha, double sigma, double phi, const Beta& beta)
    : family_(family), alpha_(alpha), sigma_(sigma), phi_(phi), beta_(beta)
{
    validate(family, alpha, sigma, phi);
}

SurvivalParams SurvivalParams::from_beta(Family family, const Beta& beta)
{
    Beta b = beta;
    if (family == Family::LL1) {
        b[1] = -1.0;
    }
    if (family != Family::LL3) {
        b[2] = 0.0;
    }
    if (!std::isfinite(b[0]) || !std::isfinite(b[1]) || !std::isfinite(b[2])) {
        throw DomainError("non-finite regression coefficients");
    }
    b[1] = std::min(b[1], kSigmaCap - 1.0);
    b[2] = std::max(std::min(b[2], 0.0), std::log(kPhiFloor));
    const double sigma = family == Family::LL1 ? 0.0 : 1.0 + b[1];
    const double phi = family == Family::LL3 ? std::exp(b[2]) : 1.0;
    return SurvivalParams(family, std::exp(b[0]), sigma, phi, b);
}

double SurvivalParams::linear_predictor(double t) const
{
    return beta_[0] + beta_[1] * std::log(t) + beta_[2] * t;
}

double survival(const SurvivalParams& p, double t)
{
    if (!(t >= 0.0)) {
        throw DomainError("survival evaluated at negative time");
    }
    if (t == 0.0) {
        return 1.0;
    }
    return logistic(p.linear_predictor(t));
}

std::vector<double> discovery_probs(const SurvivalParams& p, std::size_t n)
{
    if (n == 0) {
        throw DomainError("discovery_probs requires n >= 1");
    }
    std::vector<double> probs(n);
    for (std::size_t i = 0; i < n; ++i) {
        probs[i] = survival(p, static_cast<double>(i));
    }
    return probs;
}

double survival_integral(const SurvivalParams& p, double a, double b)
{
    if (!(a >= 0.0) || b < a) {
        throw DomainError("survival_integral requires 0 <= a <= b");
    }
    if (std::isfinite(b)) {
        return integrate_finite(p, a, b);
    }
    if (p.phi() < 1.0) {
        // S decays at least geometrically; integrate until S < 1e-12 and add
        // the exponential tail bound S(T) / (-log phi).
        double upper = std::max(a, 1.0);
        while (survival(p, upper) >= kTailSurvival) {
            upper *= 2.0;
        }
        return integrate_finite(p, a, upper) + survival(p, upper) / (-p.beta()[2]);
    }
    if (p.sigma() < 0.0) {
        const double total = ll2_expected_T(p.alpha(), p.sigma());
        return a == 0.0 ? total : total - integrate_finite(p, 0.0, a);
    }
    return std::numeric_limits<double>::infinity();
}

double expected_T(const SurvivalParams& p)
{
    return survival_integral(p, 0.0, std::numeric_limits<double>::infinity());
}

RegimeReport classify_regime(const SurvivalParams& p)
{
    const bool finite = p.phi() < 1.0 || p.sigma() < 0.0;
    if (finite) {
        return {Regime::FiniteRichness, expected_T(p), std::nullopt};
    }
    std::optional<double> exponent;
    if (p.sigma() > 0.0) {
        exponent = p.sigma();
    }
    return {Regime::InfiniteRichness, std::numeric_limits<double>::infinity(), exponent};
}

double growth_rate_bn(const SurvivalParams& p, std::size_t n)
{
    if (n == 0) {
        throw DomainError("growth_rate_bn requires n >= 1");
    }
    if (p.phi() < 1.0 || p.sigma() < 0.0) {
        throw RegimeError("growth rate b_n is defined only for infinite richness");
    }
    return integrate_finite(p, 0.0, static_cast<double>(n - 1));
}

void to_json(nlohmann::json& j, const SurvivalParams& p)
{
    const auto b = p.beta();
    j = nlohmann::json{
        {"family", to_string(p.family())},
        {"alpha", p.alpha()},
        {"sigma", p.sigma()},
        {"phi", p.phi()},
        {"beta", {b[0], b[1], b[2]}},
    };
}

SurvivalParams params_from_json(const nlohmann::json& j)
{
    try {
        const auto family = family_from_string(j.at("family").get<std::string>());
        const double alpha = j.at("alpha").get<double>();
        const double sigma = j.contains("sigma") ? j.at("sigma").get<double>() : 0.0;
        const double phi = j.contains("phi") ? j.at("phi").get<double>() : 1.0;
        return SurvivalParams(family, alpha, sigma, phi);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed parameter JSON: ") + e.what());
    }
}

} // namespace accum
