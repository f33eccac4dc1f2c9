#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace accum {

/// Log-logistic survival families. LL1 is the Dirichlet-process case
/// alpha / (alpha + t); LL2 adds the discount sigma; LL3 adds the decay phi.
enum class Family { LL1, LL2, LL3 };

std::string_view to_string(Family f);
Family family_from_string(std::string_view s);
// Number of free regression coefficients: 1, 2 or 3.
std::size_t free_coefficients(Family f);

/// Coefficients of the logistic representation
/// logit S(t) = b0 + b1 log t + b2 t, with b0 = log alpha, b1 = sigma - 1 < 0,
/// b2 = log phi <= 0.
using Beta = std::array<double, 3>;

/// Parameters of a survival family,
///   S(t; alpha, sigma, phi) = alpha phi^t / (alpha phi^t + t^(1 - sigma)).
/// Valid values satisfy alpha > 0, sigma < 1, 0 < phi <= 1, with sigma = 0
/// for LL1 and phi = 1 for LL1 and LL2.
class SurvivalParams {
public:
    SurvivalParams(Family family, double alpha, double sigma, double phi);

    static SurvivalParams ll1(double alpha) { return {Family::LL1, alpha, 0.0, 1.0}; }
    static SurvivalParams ll2(double alpha, double sigma) { return {Family::LL2, alpha, sigma, 1.0}; }
    static SurvivalParams ll3(double alpha, double sigma, double phi)
    {
        return {Family::LL3, alpha, sigma, phi};
    }

    /// Inverse of beta(). Coefficients the family does not use are ignored.
    /// sigma is capped at 1 - 1e-9 and phi at 1e-12 from below; both are
    /// numeric guards for optimizer output, not model restrictions.
    static SurvivalParams from_beta(Family family, const Beta& beta);

    Family family() const { return family_; }
    double alpha() const { return alpha_; }
    double sigma() const { return sigma_; }
    double phi() const { return phi_; }
    Beta beta() const { return beta_; }

    // logit S(t) for t > 0.
    double linear_predictor(double t) const;

    bool operator==(const SurvivalParams&) const = default;

private:
    SurvivalParams(Family family, double alpha, double sigma, double phi, const Beta& beta);

    Family family_;
    double alpha_;
    double sigma_;
    double phi_;
    Beta beta_;
};

/// S(t; theta). S(0) = 1 exactly (0^(1 - sigma) is taken as 0).
double survival(const SurvivalParams& p, double t);

/// Discovery probabilities pi_i = S(i - 1), i = 1..n.
std::vector<double> discovery_probs(const SurvivalParams& p, std::size_t n);

/// E(T) = integral of S over [0, inf). Infinite for phi = 1 and sigma >= 0.
double expected_T(const SurvivalParams& p);

/// Integral of S over [a, b]; b may be +inf.
double survival_integral(const SurvivalParams& p, double a, double b);

enum class Regime { FiniteRichness, InfiniteRichness };

std::string_view to_string(Regime r);

struct RegimeReport {
    Regime regime;
    double expected_T;
    // Polynomial growth exponent sigma of K_n when richness is infinite and sigma > 0.
    std::optional<double> growth_exponent;
};

RegimeReport classify_regime(const SurvivalParams& p);

/// b_n = integral of S(t - 1) over [1, n], the almost-sure growth rate of K_n
/// in the infinite-richness regime.
double growth_rate_bn(const SurvivalParams& p, std::size_t n);

void to_json(nlohmann::json& j, const SurvivalParams& p);
SurvivalParams params_from_json(const nlohmann::json& j);

} // namespace accum
