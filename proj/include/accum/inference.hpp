#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "accum/discovery.hpp"
#include "accum/rng.hpp"
#include "accum/survival.hpp"
#include "accum/truncated_normal.hpp"

namespace accum {

/// sum_{i=2}^n [D_i log S(i-1) + (1 - D_i) log(1 - S(i-1))]; D_1 carries no
/// information and is excluded, so a length-1 sequence scores 0.
double log_likelihood(const SurvivalParams& p, const DiscoverySequence& d);

/// Same quantity written directly in regression coefficients, without the
/// numeric guards of SurvivalParams::from_beta.
double log_likelihood_beta(const Beta& beta, const DiscoverySequence& d);

struct FitOptions {
    std::size_t max_iterations = 100;
    double gradient_tol = 1e-8;
};

struct FitResult {
    SurvivalParams params;
    Beta beta;
    // Asymptotic covariance of beta (inverse observed information); rows and
    // columns of coefficients fixed by the family or pinned at a boundary are 0.
    Eigen::Matrix3d covariance;
    bool converged = false;
    bool constraint_active = false;
    double loglik = 0.0;
    std::size_t iterations = 0;
};

/// Maximum likelihood through the logistic representation
/// logit pi_{i+1} = b0 + b1 log i + b2 i, i = 1..n-1. Newton-Raphson with step
/// halving starts from the Dirichlet point (0, -1, 0). If the unconstrained
/// optimum violates b1 < 0 or b2 <= 0 the offending coefficient is pinned to its
/// boundary and the remaining ones refitted.
FitResult fit_mle(const DiscoverySequence& d, Family family, const FitOptions& opts = {});

/// Truncated normal prior N(mean, covariance) 1(constraints) on the free
/// regression coefficients (or on gamma for the covariate model).
struct PriorSpec {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    ConstraintSet constraints;

    /// Independent N(0, sd^2) on the family's free coefficients with
    /// b1 < 0 (LL2, LL3) and b2 <= 0 (LL3).
    static PriorSpec for_family(Family family, double sd = 10.0);

    /// Independent N(0, sd^2) on gamma = (gamma0, gamma1, gamma2), each of
    /// length p, with z_l . gamma1 < 0 and z_l . gamma2 <= 0 for every site.
    static PriorSpec for_sites(const SiteDataset& data, double sd = 10.0);

    // Throws DomainError when dimensions disagree or covariance is not SPD.
    void validate(Eigen::Index dim) const;
};

struct McmcMeta {
    std::size_t iterations = 0;
    std::size_t burn_in = 0;
    std::uint64_t seed = 0;
    std::size_t chains = 1;
    std::size_t tmvn_proposals = 0;
    std::size_t tmvn_accepted = 0;
    std::size_t tmvn_fallbacks = 0;
};

/// Retained MCMC output. Single-site draws hold the full (b0, b1, b2) with
/// family-fixed entries filled in; multi-site draws hold gamma as
/// [gamma0 (p) | gamma1 (p) | gamma2 (p)].
struct PosteriorDraws {
    enum class Model { SingleSite, MultiSite };

    Model model = Model::SingleSite;
    Family family = Family::LL3;
    std::size_t covariate_dim = 0;
    Eigen::MatrixXd draws;
    std::vector<double> loglik;
    // Log-likelihood at the posterior mean of the draws (DIC plug-in point).
    std::optional<double> loglik_at_mean;
    McmcMeta meta;

    std::size_t size() const { return static_cast<std::size_t>(draws.rows()); }
    Eigen::VectorXd mean() const;
    std::vector<std::string> column_names() const;
};

/// Single chain of the Polya-gamma Gibbs sampler for one curve. The family is
/// implied by the prior dimension (1, 2 or 3 free coefficients).
PosteriorDraws gibbs_single(const DiscoverySequence& d, const PriorSpec& prior,
                            std::size_t iterations, std::size_t burn_in, Rng& rng,
                            const TmvnOptions& tmvn = {});

/// Single chain for the covariate-dependent model over all sites.
PosteriorDraws gibbs_multisite(const SiteDataset& data, const PriorSpec& prior,
                               std::size_t iterations, std::size_t burn_in, Rng& rng,
                               const TmvnOptions& tmvn = {});

struct McmcOptions {
    std::size_t iterations = 15000;
    std::size_t burn_in = 5000;
    std::uint64_t seed = 0;
    std::size_t chains = 1;
    TmvnOptions tmvn;
};

/// Runs opts.chains independent chains concurrently (chain c uses stream c of
/// opts.seed) and merges their retained draws in chain order.
PosteriorDraws run_chains(const DiscoverySequence& d, const PriorSpec& prior, const McmcOptions& opts);
PosteriorDraws run_chains(const SiteDataset& data, const PriorSpec& prior, const McmcOptions& opts);

struct DicSummary {
    double dic;
    double p_d;
    double mean_loglik;
    double loglik_at_mean;
};

/// DIC = -2 logL(theta_bar) + 2 p_D with p_D = 2 {logL(theta_bar) - mean logL}.
DicSummary dic_summary(const PosteriorDraws& draws);
double dic(const PosteriorDraws& draws);

/// Site-level coefficients (z.gamma0, z.gamma1, z.gamma2).
Beta site_beta(const Eigen::VectorXd& gamma, std::span<const double> z);

/// Total log-likelihood of the covariate model across sites.
double log_likelihood_sites(const Eigen::VectorXd& gamma, const SiteDataset& data);

/// Survival parameters of every retained draw (single-site), or of one site's
/// implied coefficients (multi-site).
std::vector<SurvivalParams> posterior_params(const PosteriorDraws& draws);
std::vector<SurvivalParams> posterior_params(const PosteriorDraws& draws, std::span<const double> z);

/// Draws CSV: `draw,beta0,beta1,beta2,loglik` or `draw,gamma<j>_<c>,...,loglik`.
void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& draws);
PosteriorDraws read_draws_csv(const std::filesystem::path& path, Family family = Family::LL3);

} // namespace accum
