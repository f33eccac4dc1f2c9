#include "accum/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "accum/error.hpp"
#include "accum/io.hpp"
#include "accum/polya_gamma.hpp"

namespace accum {

namespace {

// Boundary value used when b1 < 0 has to be pinned (sigma = 1 - 1e-9).
constexpr double kPinnedSlope = -1e-9;

double log1pexp(double x)
{
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic(double x)
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Logistic regression problem in column-scaled coordinates:
// eta = x * beta_scaled + offset, with beta_scaled = beta .* scale.
struct LogisticDesign {
    Eigen::MatrixXd x;
    Eigen::VectorXd offset;
    Eigen::VectorXd y;
    Eigen::VectorXd scale;
};

double design_loglik(const LogisticDesign& des, const Eigen::VectorXd& beta_scaled)
{
    const Eigen::VectorXd eta = des.x * beta_scaled + des.offset;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += des.y(i) * eta(i) - log1pexp(eta(i));
    }
    return ll;
}

void finish_scaling(LogisticDesign& des)
{
    des.scale = Eigen::VectorXd::Ones(des.x.cols());
    for (Eigen::Index j = 0; j < des.x.cols(); ++j) {
        const double m = des.x.col(j).cwiseAbs().maxCoeff();
        if (m > 0.0) {
            des.scale(j) = m;
            des.x.col(j) /= m;
        }
    }
}

// Regressors (1, log i, i) for rows i = 1..n-1; `free` selects the columns
// estimated, the rest enter the offset with values from `fixed`.
LogisticDesign single_design(const DiscoverySequence& d, const std::array<bool, 3>& free,
                             const Beta& fixed)
{
    const auto rows = static_cast<Eigen::Index>(d.size() - 1);
    const auto cols = static_cast<Eigen::Index>(std::count(free.begin(), free.end(), true));
    LogisticDesign des;
    des.x.resize(rows, cols);
    des.offset = Eigen::VectorXd::Zero(rows);
    des.y.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double i = static_cast<double>(r + 1);
        const double v[3] = {1.0, std::log(i), i};
        Eigen::Index c = 0;
        for (int j = 0; j < 3; ++j) {
            if (free[j]) {
                des.x(r, c++) = v[j];
            } else {
                des.offset(r) += fixed[j] * v[j];
            }
        }
        des.y(r) = d[static_cast<std::size_t>(r + 1)];
    }
    finish_scaling(des);
    return des;
}

std::array<bool, 3> family_free(Family f)
{
    switch (f) {
    case Family::LL1: return {true, false, false};
    case Family::LL2: return {true, true, false};
    case Family::LL3: return {true, true, true};
    }
    return {true, true, true};
}

Beta family_fixed(Family)
{
    return {0.0, -1.0, 0.0};
}

Family family_from_dim(Eigen::Index dim)
{
    switch (dim) {
    case 1: return Family::LL1;
    case 2: return Family::LL2;
    case 3: return Family::LL3;
    default: throw DomainError("single-site prior must have 1, 2 or 3 coefficients");
    }
}

LogisticDesign sites_design(const SiteDataset& data)
{
    const auto p = static_cast<Eigen::Index>(data.covariate_dim());
    Eigen::Index rows = 0;
    for (const auto& s : data.sites()) {
        rows += static_cast<Eigen::Index>(s.sequence.size() - 1);
    }
    LogisticDesign des;
    des.x.resize(rows, 3 * p);
    des.offset = Eigen::VectorXd::Zero(rows);
    des.y.resize(rows);
    Eigen::Index r = 0;
    for (const auto& s : data.sites()) {
        for (std::size_t t = 1; t < s.sequence.size(); ++t, ++r) {
            const double i = static_cast<double>(t);
            const double li = std::log(i);
            for (Eigen::Index c = 0; c < p; ++c) {
                const double z = s.covariates[static_cast<std::size_t>(c)];
                des.x(r, c) = z;
                des.x(r, p + c) = z * li;
                des.x(r, 2 * p + c) = z * i;
            }
            des.y(r) = s.sequence[t];
        }
    }
    finish_scaling(des);
    return des;
}

struct NewtonResult {
    Eigen::VectorXd beta_scaled;
    Eigen::MatrixXd hessian_inv_scaled;
    double loglik;
    std::size_t iterations;
};

NewtonResult newton(const LogisticDesign& des, Eigen::VectorXd beta, const FitOptions& opts)
{
    const Eigen::Index n = des.x.rows();
    double ll = design_loglik(des, beta);
    for (std::size_t it = 0; it <= opts.max_iterations; ++it) {
        const Eigen::VectorXd eta = des.x * beta + des.offset;
        Eigen::VectorXd resid(n);
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = logistic(eta(i));
            resid(i) = des.y(i) - p;
            w(i) = p * (1.0 - p);
        }
        const Eigen::VectorXd grad = des.x.transpose() * resid;
        const Eigen::MatrixXd info = des.x.transpose() * w.asDiagonal() * des.x;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            throw NumericalError("singular information matrix in Newton fit");
        }
        if (grad.cwiseAbs().maxCoeff() < opts.gradient_tol) {
            return {beta, ldlt.solve(Eigen::MatrixXd::Identity(beta.size(), beta.size())), ll, it};
        }
        if (beta.cwiseAbs().maxCoeff() > 1e4 || -ll < 1e-10 * static_cast<double>(n)) {
            throw NumericalError("complete separation: the likelihood increases without bound "
                                 "as coefficients diverge");
        }
        const Eigen::VectorXd step = ldlt.solve(grad);
        double t = 1.0;
        Eigen::VectorXd candidate = beta + step;
        double cand_ll = design_loglik(des, candidate);
        while (!(cand_ll >= ll - 1e-12 * std::abs(ll)) && t > 1e-10) {
            t *= 0.5;
            candidate = beta + t * step;
            cand_ll = design_loglik(des, candidate);
        }
        beta = candidate;
        ll = cand_ll;
    }
    throw NumericalError("Newton fit did not converge in " + std::to_string(opts.max_iterations) +
                         " iterations");
}

struct SingleFit {
    Beta beta;
    Eigen::Matrix3d cov;
    double loglik;
    std::size_t iterations;
};

SingleFit fit_with_free(const DiscoverySequence& d, const std::array<bool, 3>& free,
                        const Beta& fixed, const FitOptions& opts)
{
    auto des = single_design(d, free, fixed);
    Eigen::VectorXd start(des.x.cols());
    {
        const Beta origin = {0.0, -1.0, 0.0};
        Eigen::Index c = 0;
        for (int j = 0; j < 3; ++j) {
            if (free[j]) {
                start(c) = origin[j] * des.scale(c);
                ++c;
            }
        }
    }
    const auto res = newton(des, start, opts);
    SingleFit out{fixed, Eigen::Matrix3d::Zero(), res.loglik, res.iterations};
    std::array<int, 3> index{-1, -1, -1};
    Eigen::Index c = 0;
    for (int j = 0; j < 3; ++j) {
        if (free[j]) {
            index[j] = static_cast<int>(c);
            out.beta[j] = res.beta_scaled(c) / des.scale(c);
            ++c;
        }
    }
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            if (index[a] >= 0 && index[b] >= 0) {
                out.cov(a, b) = res.hessian_inv_scaled(index[a], index[b]) /
                                (des.scale(index[a]) * des.scale(index[b]));
            }
        }
    }
    return out;
}

struct GibbsProblem {
    LogisticDesign des;
    Eigen::VectorXd prior_mean;   // scaled
    Eigen::MatrixXd prior_prec;   // scaled
    ConstraintSet constraints;    // scaled
    Eigen::VectorXd start;        // scaled, feasible
};

double log_posterior(const GibbsProblem& prob, const Eigen::VectorXd& x)
{
    const Eigen::VectorXd r = x - prob.prior_mean;
    return design_loglik(prob.des, x) - 0.5 * r.dot(prob.prior_prec * r);
}

// Damped Newton ascent on the log posterior that never leaves the constraint
// set; the chain starts where it stops.
Eigen::VectorXd constrained_mode(const GibbsProblem& prob, Eigen::VectorXd x)
{
    const auto& des = prob.des;
    const Eigen::Index n = des.x.rows();
    double obj = log_posterior(prob, x);
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd eta = des.x * x + des.offset;
        Eigen::VectorXd resid(n);
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = logistic(eta(i));
            resid(i) = des.y(i) - p;
            w(i) = p * (1.0 - p);
        }
        const Eigen::VectorXd grad =
            des.x.transpose() * resid - prob.prior_prec * (x - prob.prior_mean);
        if (grad.cwiseAbs().maxCoeff() < 1e-8) {
            break;
        }
        const Eigen::MatrixXd hess = des.x.transpose() * w.asDiagonal() * des.x + prob.prior_prec;
        const Eigen::VectorXd step = hess.ldlt().solve(grad);
        bool moved = false;
        for (double t = 1.0; t > 1e-12; t *= 0.5) {
            const Eigen::VectorXd cand = x + t * step;
            if (!satisfies(prob.constraints, cand)) {
                continue;
            }
            const double cand_obj = log_posterior(prob, cand);
            if (cand_obj > obj) {
                x = cand;
                moved = cand_obj - obj > 1e-12 * std::abs(obj);
                obj = cand_obj;
                break;
            }
        }
        if (!moved) {
            break;
        }
    }
    return x;
}

GibbsProblem make_problem(LogisticDesign des, const PriorSpec& prior, const Eigen::VectorXd& start)
{
    GibbsProblem prob;
    const Eigen::Index d = des.x.cols();
    prior.validate(d);
    const Eigen::VectorXd& s = des.scale;
    prob.prior_mean = prior.mean.cwiseProduct(s);
    const Eigen::MatrixXd cov_scaled = s.asDiagonal() * prior.covariance * s.asDiagonal();
    prob.prior_prec = cov_scaled.llt().solve(Eigen::MatrixXd::Identity(d, d));
    for (const auto& c : prior.constraints) {
        prob.constraints.push_back({c.coef.cwiseQuotient(s), c.strict});
    }
    Eigen::VectorXd x0 = start.cwiseProduct(s);
    if (!satisfies(prob.constraints, x0)) {
        x0 = interior_point(prior.constraints, d).cwiseProduct(s);
    }
    prob.des = std::move(des);
    prob.start = constrained_mode(prob, std::move(x0));
    return prob;
}

struct ChainOutput {
    Eigen::MatrixXd draws_scaled;
    std::vector<double> loglik;
    TmvnStats stats;
};

ChainOutput run_gibbs(const GibbsProblem& prob, std::size_t iterations, std::size_t burn_in,
                      Rng& rng, const TmvnOptions& tmvn)
{
    if (!(iterations > burn_in)) {
        throw DomainError("MCMC requires iterations > burn-in");
    }
    const auto& des = prob.des;
    const Eigen::Index n = des.x.rows();
    const Eigen::Index d = des.x.cols();
    const Eigen::VectorXd kappa = des.y.array() - 0.5;
    const Eigen::VectorXd prior_term = prob.prior_prec * prob.prior_mean;

    ChainOutput out;
    out.draws_scaled.resize(static_cast<Eigen::Index>(iterations - burn_in), d);
    out.loglik.reserve(iterations - burn_in);

    Eigen::VectorXd beta = prob.start;
    Eigen::VectorXd omega(n);
    Eigen::MatrixXd xw(n, d);
    for (std::size_t it = 0; it < iterations; ++it) {
        const Eigen::VectorXd eta = des.x * beta + des.offset;
        for (Eigen::Index i = 0; i < n; ++i) {
            omega(i) = sample_pg(eta(i), rng);
        }
        xw = des.x.array().colwise() * omega.array().sqrt();
        Eigen::MatrixXd prec = prob.prior_prec;
        prec.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
        prec = prec.selfadjointView<Eigen::Lower>();
        const Eigen::VectorXd rhs =
            des.x.transpose() * (kappa - omega.cwiseProduct(des.offset)) + prior_term;
        Eigen::LLT<Eigen::MatrixXd> llt(prec);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("posterior precision is not positive definite");
        }
        const Eigen::VectorXd mean = llt.solve(rhs);
        beta = sample_truncated_mvn_precision(mean, prec, prob.constraints, rng, tmvn, &beta,
                                              &out.stats);
        if (it >= burn_in) {
            const auto r = static_cast<Eigen::Index>(it - burn_in);
            out.draws_scaled.row(r) = beta.transpose();
            out.loglik.push_back(design_loglik(des, beta));
        }
    }
    return out;
}

Eigen::MatrixXd unscale(const Eigen::MatrixXd& draws_scaled, const Eigen::VectorXd& scale)
{
    return draws_scaled.array().rowwise() / scale.transpose().array();
}

// Expand free single-site coefficients into full (b0, b1, b2) rows.
Eigen::MatrixXd expand_single(const Eigen::MatrixXd& free_draws, Family family)
{
    const auto free = family_free(family);
    const auto fixed = family_fixed(family);
    Eigen::MatrixXd full(free_draws.rows(), 3);
    Eigen::Index c = 0;
    for (int j = 0; j < 3; ++j) {
        if (free[j]) {
            full.col(j) = free_draws.col(c++);
        } else {
            full.col(j).setConstant(fixed[j]);
        }
    }
    return full;
}

void add_stats(McmcMeta& meta, const TmvnStats& s)
{
    meta.tmvn_proposals += s.proposals;
    meta.tmvn_accepted += s.accepted;
    meta.tmvn_fallbacks += s.fallbacks;
}

PosteriorDraws single_from_chain(const DiscoverySequence& d, Family family, const GibbsProblem& prob,
                                 ChainOutput&& chain)
{
    PosteriorDraws out;
    out.model = PosteriorDraws::Model::SingleSite;
    out.family = family;
    out.draws = expand_single(unscale(chain.draws_scaled, prob.des.scale), family);
    out.loglik = std::move(chain.loglik);
    const Eigen::VectorXd m = out.mean();
    out.loglik_at_mean = log_likelihood_beta({m(0), m(1), m(2)}, d);
    add_stats(out.meta, chain.stats);
    return out;
}

PosteriorDraws sites_from_chain(const SiteDataset& data, const GibbsProblem& prob, ChainOutput&& chain)
{
    PosteriorDraws out;
    out.model = PosteriorDraws::Model::MultiSite;
    out.family = Family::LL3;
    out.covariate_dim = data.covariate_dim();
    out.draws = unscale(chain.draws_scaled, prob.des.scale);
    out.loglik = std::move(chain.loglik);
    out.loglik_at_mean = log_likelihood_sites(out.mean(), data);
    add_stats(out.meta, chain.stats);
    return out;
}

Eigen::VectorXd single_start(Family family)
{
    const auto free = family_free(family);
    const Beta origin = {0.0, -1.0, 0.0};
    Eigen::VectorXd s(static_cast<Eigen::Index>(free_coefficients(family)));
    Eigen::Index c = 0;
    for (int j = 0; j < 3; ++j) {
        if (free[j]) {
            s(c++) = origin[j];
        }
    }
    return s;
}

template <class Build>
PosteriorDraws merge_chains(const McmcOptions& opts, Build build_chain)
{
    if (opts.chains == 0) {
        throw DomainError("at least one chain is required");
    }
    std::vector<PosteriorDraws> results(opts.chains);
    std::vector<std::exception_ptr> errors(opts.chains);
    std::vector<std::thread> threads;
    for (std::size_t c = 0; c < opts.chains; ++c) {
        threads.emplace_back([&, c] {
            try {
                Rng rng(opts.seed, c);
                results[c] = build_chain(rng);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    PosteriorDraws merged = results.front();
    for (std::size_t c = 1; c < results.size(); ++c) {
        const auto& r = results[c];
        Eigen::MatrixXd stacked(merged.draws.rows() + r.draws.rows(), merged.draws.cols());
        stacked << merged.draws, r.draws;
        merged.draws = std::move(stacked);
        merged.loglik.insert(merged.loglik.end(), r.loglik.begin(), r.loglik.end());
        merged.meta.tmvn_proposals += r.meta.tmvn_proposals;
        merged.meta.tmvn_accepted += r.meta.tmvn_accepted;
        merged.meta.tmvn_fallbacks += r.meta.tmvn_fallbacks;
    }
    merged.meta.iterations = opts.iterations;
    merged.meta.burn_in = opts.burn_in;
    merged.meta.seed = opts.seed;
    merged.meta.chains = opts.chains;
    return merged;
}

} // namespace

double log_likelihood_beta(const Beta& beta, const DiscoverySequence& d)
{
    double ll = 0.0;
    for (std::size_t t = 1; t < d.size(); ++t) {
        const double i = static_cast<double>(t);
        const double eta = beta[0] + beta[1] * std::log(i) + beta[2] * i;
        ll += d[t] ? -log1pexp(-eta) : -log1pexp(eta);
    }
    return ll;
}

double log_likelihood(const SurvivalParams& p, const DiscoverySequence& d)
{
    return log_likelihood_beta(p.beta(), d);
}

FitResult fit_mle(const DiscoverySequence& d, Family family, const FitOptions& opts)
{
    const std::size_t min_n = free_coefficients(family) + 1;
    if (d.size() < min_n) {
        throw InputError("fitting " + std::string(to_string(family)) + " needs at least " +
                         std::to_string(min_n) + " observations");
    }
    const std::size_t k = d.discoveries();
    if (k == d.size()) {
        throw NumericalError("complete separation: every observation is a new discovery, "
                             "so alpha diverges");
    }
    if (k == 1) {
        throw NumericalError("complete separation: no discoveries after the first observation, "
                             "so alpha tends to 0");
    }

    auto free = family_free(family);
    Beta fixed = family_fixed(family);
    SingleFit fit = fit_with_free(d, free, fixed, opts);
    bool active = false;
    // Pin violated coefficients at their boundary and refit the rest.
    for (int round = 0; round < 2; ++round) {
        bool changed = false;
        if (free[2] && fit.beta[2] > 0.0) {
            free[2] = false;
            fixed[2] = 0.0;
            changed = true;
        }
        if (free[1] && fit.beta[1] >= 0.0) {
            free[1] = false;
            fixed[1] = kPinnedSlope;
            changed = true;
        }
        if (!changed) {
            break;
        }
        active = true;
        fit = fit_with_free(d, free, fixed, opts);
    }
    FitResult out{SurvivalParams::from_beta(family, fit.beta), fit.beta, fit.cov, true, active,
                  fit.loglik, fit.iterations};
    return out;
}

PriorSpec PriorSpec::for_family(Family family, double sd)
{
    const auto dim = static_cast<Eigen::Index>(free_coefficients(family));
    PriorSpec prior;
    prior.mean = Eigen::VectorXd::Zero(dim);
    prior.covariance = Eigen::MatrixXd::Identity(dim, dim) * sd * sd;
    if (dim >= 2) {
        prior.constraints.push_back({Eigen::VectorXd::Unit(dim, 1), true});
    }
    if (dim >= 3) {
        prior.constraints.push_back({Eigen::VectorXd::Unit(dim, 2), false});
    }
    return prior;
}

PriorSpec PriorSpec::for_sites(const SiteDataset& data, double sd)
{
    const auto p = static_cast<Eigen::Index>(data.covariate_dim());
    PriorSpec prior;
    prior.mean = Eigen::VectorXd::Zero(3 * p);
    prior.covariance = Eigen::MatrixXd::Identity(3 * p, 3 * p) * sd * sd;
    std::vector<std::vector<double>> seen;
    for (const auto& s : data.sites()) {
        if (std::find(seen.begin(), seen.end(), s.covariates) != seen.end()) {
            continue;
        }
        seen.push_back(s.covariates);
        Eigen::VectorXd a1 = Eigen::VectorXd::Zero(3 * p);
        Eigen::VectorXd a2 = Eigen::VectorXd::Zero(3 * p);
        for (Eigen::Index c = 0; c < p; ++c) {
            a1(p + c) = s.covariates[static_cast<std::size_t>(c)];
            a2(2 * p + c) = s.covariates[static_cast<std::size_t>(c)];
        }
        prior.constraints.push_back({a1, true});
        prior.constraints.push_back({a2, false});
    }
    return prior;
}

void PriorSpec::validate(Eigen::Index dim) const
{
    if (mean.size() != dim || covariance.rows() != dim || covariance.cols() != dim) {
        throw DomainError("prior dimension " + std::to_string(mean.size()) +
                          " does not match the model dimension " + std::to_string(dim));
    }
    if (!covariance.isApprox(covariance.transpose())) {
        throw DomainError("prior covariance must be symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success) {
        throw DomainError("prior covariance must be positive definite");
    }
    for (const auto& c : constraints) {
        if (c.coef.size() != dim) {
            throw DomainError("constraint dimension does not match the prior");
        }
    }
}

Eigen::VectorXd PosteriorDraws::mean() const
{
    if (draws.rows() == 0) {
        throw DomainError("posterior draws are empty");
    }
    return draws.colwise().mean().transpose();
}

std::vector<std::string> PosteriorDraws::column_names() const
{
    if (model == Model::SingleSite) {
        return {"beta0", "beta1", "beta2"};
    }
    std::vector<std::string> names;
    for (int j = 0; j < 3; ++j) {
        for (std::size_t c = 1; c <= covariate_dim; ++c) {
            names.push_back("gamma" + std::to_string(j) + "_" + std::to_string(c));
        }
    }
    return names;
}

PosteriorDraws gibbs_single(const DiscoverySequence& d, const PriorSpec& prior,
                            std::size_t iterations, std::size_t burn_in, Rng& rng,
                            const TmvnOptions& tmvn)
{
    if (d.size() < 2) {
        throw InputError("MCMC needs at least two observations");
    }
    const Family family = family_from_dim(prior.mean.size());
    auto prob = make_problem(single_design(d, family_free(family), family_fixed(family)), prior,
                             single_start(family));
    auto out = single_from_chain(d, family, prob, run_gibbs(prob, iterations, burn_in, rng, tmvn));
    out.meta.iterations = iterations;
    out.meta.burn_in = burn_in;
    out.meta.seed = rng.seed();
    return out;
}

PosteriorDraws gibbs_multisite(const SiteDataset& data, const PriorSpec& prior,
                               std::size_t iterations, std::size_t burn_in, Rng& rng,
                               const TmvnOptions& tmvn)
{
    const auto p = static_cast<Eigen::Index>(data.covariate_dim());
    prior.validate(3 * p);
    // Dirichlet-like start: site slopes -1 and a nearly flat geometric factor.
    Eigen::VectorXd start = interior_point(prior.constraints, 3 * p);
    start.head(p).setZero();
    start.tail(p) *= 1e-4;
    auto prob = make_problem(sites_design(data), prior, start);
    auto out = sites_from_chain(data, prob, run_gibbs(prob, iterations, burn_in, rng, tmvn));
    out.meta.iterations = iterations;
    out.meta.burn_in = burn_in;
    out.meta.seed = rng.seed();
    return out;
}

PosteriorDraws run_chains(const DiscoverySequence& d, const PriorSpec& prior, const McmcOptions& opts)
{
    auto merged = merge_chains(opts, [&](Rng& rng) {
        return gibbs_single(d, prior, opts.iterations, opts.burn_in, rng, opts.tmvn);
    });
    const Eigen::VectorXd m = merged.mean();
    merged.loglik_at_mean = log_likelihood_beta({m(0), m(1), m(2)}, d);
    return merged;
}

PosteriorDraws run_chains(const SiteDataset& data, const PriorSpec& prior, const McmcOptions& opts)
{
    auto merged = merge_chains(opts, [&](Rng& rng) {
        return gibbs_multisite(data, prior, opts.iterations, opts.burn_in, rng, opts.tmvn);
    });
    merged.loglik_at_mean = log_likelihood_sites(merged.mean(), data);
    return merged;
}

DicSummary dic_summary(const PosteriorDraws& draws)
{
    if (draws.loglik.size() != draws.size()) {
        throw DomainError("posterior draws lack per-draw log-likelihoods");
    }
    if (draws.size() < 2) {
        throw DomainError("DIC needs at least two retained draws");
    }
    if (!draws.loglik_at_mean) {
        throw DomainError("posterior draws lack the log-likelihood at the posterior mean");
    }
    double mean_ll = 0.0;
    for (double v : draws.loglik) {
        mean_ll += v;
    }
    mean_ll /= static_cast<double>(draws.loglik.size());
    const double at_mean = *draws.loglik_at_mean;
    const double p_d = 2.0 * (at_mean - mean_ll);
    return {-2.0 * at_mean + 2.0 * p_d, p_d, mean_ll, at_mean};
}

double dic(const PosteriorDraws& draws)
{
    return dic_summary(draws).dic;
}

Beta site_beta(const Eigen::VectorXd& gamma, std::span<const double> z)
{
    const auto p = static_cast<Eigen::Index>(z.size());
    if (gamma.size() != 3 * p) {
        throw DomainError("gamma length must be 3 times the covariate dimension");
    }
    Beta b{0.0, 0.0, 0.0};
    for (int j = 0; j < 3; ++j) {
        for (Eigen::Index c = 0; c < p; ++c) {
            b[static_cast<std::size_t>(j)] += gamma(j * p + c) * z[static_cast<std::size_t>(c)];
        }
    }
    return b;
}

double log_likelihood_sites(const Eigen::VectorXd& gamma, const SiteDataset& data)
{
    double ll = 0.0;
    for (const auto& s : data.sites()) {
        ll += log_likelihood_beta(site_beta(gamma, s.covariates), s.sequence);
    }
    return ll;
}

std::vector<SurvivalParams> posterior_params(const PosteriorDraws& draws)
{
    if (draws.model != PosteriorDraws::Model::SingleSite) {
        throw DomainError("multi-site draws need a covariate vector");
    }
    std::vector<SurvivalParams> out;
    out.reserve(draws.size());
    for (Eigen::Index r = 0; r < draws.draws.rows(); ++r) {
        out.push_back(SurvivalParams::from_beta(
            draws.family, {draws.draws(r, 0), draws.draws(r, 1), draws.draws(r, 2)}));
    }
    return out;
}

std::vector<SurvivalParams> posterior_params(const PosteriorDraws& draws, std::span<const double> z)
{
    if (draws.model != PosteriorDraws::Model::MultiSite) {
        return posterior_params(draws);
    }
    std::vector<SurvivalParams> out;
    out.reserve(draws.size());
    for (Eigen::Index r = 0; r < draws.draws.rows(); ++r) {
        out.push_back(SurvivalParams::from_beta(Family::LL3,
                                                site_beta(draws.draws.row(r).transpose(), z)));
    }
    return out;
}

void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& draws)
{
    std::string out = "draw";
    for (const auto& name : draws.column_names()) {
        out += ',' + name;
    }
    out += ",loglik\n";
    for (Eigen::Index r = 0; r < draws.draws.rows(); ++r) {
        out += std::to_string(r + 1);
        for (Eigen::Index c = 0; c < draws.draws.cols(); ++c) {
            out += ',' + io::format_real(draws.draws(r, c));
        }
        out += ',' + io::format_real(draws.loglik[static_cast<std::size_t>(r)]) + '\n';
    }
    io::write_file(path, out);
}

PosteriorDraws read_draws_csv(const std::filesystem::path& path, Family family)
{
    std::istringstream in(io::read_file(path));
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("empty draws file '" + path.string() + "'");
    }
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string f;
        while (std::getline(hs, f, ',')) {
            while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) {
                f.pop_back();
            }
            header.push_back(f);
        }
    }
    if (header.size() < 3 || header.front() != "draw" || header.back() != "loglik") {
        throw InputError("draws file must have header 'draw,...,loglik'");
    }
    PosteriorDraws out;
    out.family = family;
    const std::size_t cols = header.size() - 2;
    if (header[1] == "beta0") {
        if (cols != 3 || header[2] != "beta1" || header[3] != "beta2") {
            throw InputError("single-site draws need columns beta0,beta1,beta2");
        }
        out.model = PosteriorDraws::Model::SingleSite;
    } else {
        if (cols % 3 != 0) {
            throw InputError("multi-site draws need 3p gamma columns");
        }
        out.model = PosteriorDraws::Model::MultiSite;
        out.family = Family::LL3;
        out.covariate_dim = cols / 3;
        const auto expected = out.column_names();
        for (std::size_t c = 0; c < cols; ++c) {
            if (header[c + 1] != expected[c]) {
                throw InputError("unexpected draws column '" + header[c + 1] + "'");
            }
        }
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        std::istringstream rs(line);
        std::string f;
        std::vector<double> vals;
        while (std::getline(rs, f, ',')) {
            try {
                vals.push_back(std::stod(f));
            } catch (const std::exception&) {
                throw InputError("invalid number '" + f + "' in draws file");
            }
        }
        if (vals.size() != header.size()) {
            throw InputError("draws row has the wrong number of fields");
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) {
        throw InputError("draws file '" + path.string() + "' has no draws");
    }
    out.draws.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c + 1];
        }
        out.loglik.push_back(rows[r].back());
    }
    return out;
}

} // namespace accum
