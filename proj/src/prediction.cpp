#include "accum/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "accum/error.hpp"
#include "accum/rng.hpp"

namespace accum {

namespace {

constexpr std::size_t kTailTermCap = 200000;
constexpr std::size_t kRequiredMCap = std::size_t{1} << 52;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_level(double level)
{
    if (!(level > 0.0 && level < 1.0)) {
        throw DomainError("credible level must lie in (0, 1)");
    }
}

struct TailSum {
    double sum = 0.0;
    double variance = 0.0;
};

// sum_{t >= n} S(t) and sum_{t >= n} S(t)(1 - S(t)), finite regime only.
TailSum tail_sum(const SurvivalParams& p, std::size_t n, double tol)
{
    TailSum out;
    std::size_t t = n;
    double term = survival(p, static_cast<double>(t));
    for (std::size_t count = 0; count < kTailTermCap; ++count) {
        out.sum += term;
        out.variance += term * (1.0 - term);
        ++t;
        term = survival(p, static_cast<double>(t));
        if (term < tol) {
            break;
        }
    }
    // Remainder over t >= current t.
    double rem = 0.0;
    if (term < tol && p.phi() < 1.0) {
        rem = term / (1.0 - p.phi());
    } else {
        rem = survival_integral(p, static_cast<double>(t), kInf) + term / 2.0;
    }
    out.sum += rem;
    out.variance += rem;
    return out;
}

std::string infinite_explanation(const SurvivalParams& p)
{
    std::string msg = "infinite richness: phi = 1 and sigma = " + std::to_string(p.sigma()) +
                      " >= 0, so E(T) diverges and K_n grows without bound";
    if (p.sigma() > 0.0) {
        msg += " (polynomially, like n^sigma)";
    } else {
        msg += " (logarithmically)";
    }
    return msg;
}

double quantile_sorted(const std::vector<double>& sorted, double q)
{
    if (sorted.size() == 1) {
        return sorted.front();
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void check_counts(std::size_t n, std::size_t k)
{
    if (k > n) {
        throw DomainError("k = " + std::to_string(k) + " distinct entities cannot exceed n = " +
                          std::to_string(n) + " observations");
    }
    if (n > 0 && k == 0) {
        throw DomainError("a non-empty sample has at least one distinct entity");
    }
}

void check_draws(std::span<const SurvivalParams> draws)
{
    if (draws.empty()) {
        throw DomainError("posterior draws are empty");
    }
}

// sum_{t >= a} S(t): a short direct sum followed by the Euler-Maclaurin
// correction of the integral tail.
double tail_from(const SurvivalParams& p, std::size_t a)
{
    constexpr std::size_t kDirect = 64;
    double sum = 0.0;
    for (std::size_t t = a; t < a + kDirect; ++t) {
        sum += survival(p, static_cast<double>(t));
    }
    const double b = static_cast<double>(a + kDirect);
    const double s = survival(p, b);
    const auto beta = p.beta();
    const double ds = -s * (1.0 - s) * (beta[1] / b + beta[2]);
    return sum + survival_integral(p, b, kInf) + s / 2.0 - ds / 12.0;
}

// Smallest m with k + sum_{t=n}^{n+m-1} term(t) >= target * total. Horizons up
// to kDirectHorizon are found from exact prefix sums (doubling blocks, then a
// binary search inside the block that crosses); beyond that the remaining
// tail after n + m is bisected instead.
std::size_t search_required_m(const std::function<double(std::size_t)>& term,
                              const std::function<double(std::size_t)>& tail, std::size_t n,
                              std::size_t k, double total, double target)
{
    constexpr std::size_t kDirectHorizon = std::size_t{1} << 16;
    if (!(target < 1.0)) {
        throw DomainError("target saturation must be below 1");
    }
    if (!std::isfinite(total)) {
        throw RegimeError("required_m is undefined with infinite richness");
    }
    const double need = target * total - static_cast<double>(k);
    if (need <= 0.0) {
        return 0;
    }
    double base = 0.0;
    std::size_t lo = 0;
    std::size_t hi = 1;
    while (hi <= kDirectHorizon) {
        double block = base;
        for (std::size_t m = lo; m < hi; ++m) {
            block += term(n + m);
        }
        if (block >= need) {
            std::vector<double> prefix(hi - lo);
            double acc = base;
            for (std::size_t m = lo; m < hi; ++m) {
                acc += term(n + m);
                prefix[m - lo] = acc;
            }
            const auto it = std::lower_bound(prefix.begin(), prefix.end(), need);
            return lo + static_cast<std::size_t>(it - prefix.begin()) + 1;
        }
        base = block;
        lo = hi;
        hi *= 2;
    }
    // Remaining mass after n + m must fall to total - k - need.
    const double allowed = total - static_cast<double>(k) - need;
    while (tail(n + hi) > allowed) {
        if (hi >= kRequiredMCap) {
            throw NumericalError("target saturation needs more than " +
                                 std::to_string(kRequiredMCap) + " further observations");
        }
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (tail(n + mid) > allowed) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

} // namespace

std::vector<double> rarefaction(const SurvivalParams& p, std::size_t n)
{
    if (n == 0) {
        throw DomainError("rarefaction requires n >= 1");
    }
    auto probs = discovery_probs(p, n);
    std::partial_sum(probs.begin(), probs.end(), probs.begin());
    return probs;
}

ExtrapolationResult extrapolate(const SurvivalParams& p, std::size_t n, std::size_t k,
                                std::size_t m, double level)
{
    if (k == 0 || k > n) {
        throw DomainError("extrapolation requires 1 <= k <= n");
    }
    if (m == 0) {
        throw DomainError("extrapolation horizon m must be at least 1");
    }
    check_level(level);
    std::vector<double> probs(m);
    for (std::size_t j = 0; j < m; ++j) {
        probs[j] = survival(p, static_cast<double>(n + j));
    }
    ExtrapolationResult out;
    out.horizon = m;
    out.level = level;
    out.distribution.emplace(probs);
    const double kd = static_cast<double>(k);
    out.mean = kd + out.distribution->mean();
    out.lower = kd + static_cast<double>(out.distribution->quantile((1.0 - level) / 2.0));
    out.upper = kd + static_cast<double>(out.distribution->quantile((1.0 + level) / 2.0));
    return out;
}

std::vector<BandPoint> predictive_band(std::span<const SurvivalParams> draws, std::size_t n,
                                       std::size_t k, std::span<const std::size_t> horizons,
                                       double level, const BandOptions& opts)
{
    check_draws(draws);
    check_counts(n, k);
    check_level(level);
    if (horizons.empty()) {
        throw DomainError("at least one horizon is required");
    }
    if (opts.sims_per_draw == 0) {
        throw DomainError("sims_per_draw must be positive");
    }
    std::vector<std::size_t> sorted(horizons.begin(), horizons.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (sorted.front() == 0) {
        throw DomainError("horizons must be at least 1");
    }
    const std::size_t max_h = sorted.back();

    std::vector<std::size_t> used(draws.size());
    std::iota(used.begin(), used.end(), std::size_t{0});
    if (opts.max_draws > 0 && draws.size() > opts.max_draws) {
        used.resize(opts.max_draws);
        for (std::size_t i = 0; i < opts.max_draws; ++i) {
            used[i] = i * draws.size() / opts.max_draws;
        }
    }

    std::vector<std::vector<std::uint64_t>> hist(sorted.size());
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        hist[j].assign(sorted[j] + 1, 0);
    }
    Rng rng(opts.seed, 0);
    std::vector<double> probs(max_h);
    for (std::size_t d : used) {
        for (std::size_t t = 0; t < max_h; ++t) {
            probs[t] = survival(draws[d], static_cast<double>(n + t));
        }
        std::vector<PoissonBinomial> segments;
        segments.reserve(sorted.size());
        std::size_t start = 0;
        for (std::size_t h : sorted) {
            segments.emplace_back(std::span<const double>(probs).subspan(start, h - start));
            start = h;
        }
        for (std::size_t s = 0; s < opts.sims_per_draw; ++s) {
            std::size_t total = 0;
            for (std::size_t j = 0; j < segments.size(); ++j) {
                total += segments[j].sample(rng);
                ++hist[j][total];
            }
        }
    }

    const double count = static_cast<double>(used.size() * opts.sims_per_draw);
    const double kd = static_cast<double>(k);
    std::vector<BandPoint> by_sorted(sorted.size());
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        const auto& h = hist[j];
        double sum = 0.0;
        for (std::size_t v = 0; v < h.size(); ++v) {
            sum += static_cast<double>(v) * static_cast<double>(h[v]);
        }
        const auto quant = [&](double q) {
            const double target = q * count;
            double cum = 0.0;
            for (std::size_t v = 0; v < h.size(); ++v) {
                cum += static_cast<double>(h[v]);
                if (cum >= target && h[v] > 0) {
                    return static_cast<double>(v);
                }
            }
            return static_cast<double>(h.size() - 1);
        };
        by_sorted[j] = {sorted[j], kd + sum / count, kd + quant((1.0 - level) / 2.0),
                        kd + quant((1.0 + level) / 2.0)};
    }
    std::vector<BandPoint> out;
    out.reserve(horizons.size());
    for (std::size_t h : horizons) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), h);
        out.push_back(by_sorted[static_cast<std::size_t>(it - sorted.begin())]);
    }
    return out;
}

RichnessReport richness(const SurvivalParams& p, std::size_t n, std::size_t k, double tail_tol)
{
    check_counts(n, k);
    if (!(tail_tol > 0.0)) {
        throw DomainError("tail_tol must be positive");
    }
    RichnessReport out;
    const double kd = static_cast<double>(k);
    if (classify_regime(p).regime == Regime::InfiniteRichness) {
        out.infinite = true;
        out.explanation = infinite_explanation(p);
        out.richness = out.lower = out.upper = out.approx = out.variance = kInf;
        return out;
    }
    const TailSum tail = tail_sum(p, n, tail_tol);
    const double integral = survival_integral(p, static_cast<double>(n), kInf);
    out.richness = kd + tail.sum;
    out.variance = tail.variance;
    out.lower = kd + integral;
    out.upper = out.lower + survival(p, static_cast<double>(n));
    out.approx = 0.5 * (out.lower + out.upper);
    if (out.richness > 0.0) {
        out.saturation_plugin = kd / out.richness;
        out.saturation = out.saturation_plugin;
    }
    return out;
}

RichnessReport richness(std::span<const SurvivalParams> draws, std::size_t n, std::size_t k,
                        double tail_tol)
{
    check_draws(draws);
    std::vector<RichnessReport> per;
    per.reserve(draws.size());
    std::size_t infinite = 0;
    for (const auto& p : draws) {
        per.push_back(richness(p, n, k, tail_tol));
        infinite += per.back().infinite ? 1 : 0;
    }
    RichnessReport out;
    if (infinite > 0 && draws.size() == 1) {
        return per.front();
    }
    if (infinite > 0) {
        out.infinite = true;
        out.explanation = "infinite richness: " + std::to_string(infinite) + " of " +
                          std::to_string(draws.size()) +
                          " posterior draws have phi = 1 and sigma >= 0, so the posterior mean "
                          "of K_inf diverges";
        out.richness = out.lower = out.upper = out.approx = out.variance = kInf;
        return out;
    }
    const double d = static_cast<double>(draws.size());
    const double kd = static_cast<double>(k);
    std::vector<double> values;
    values.reserve(per.size());
    double mean_var = 0.0;
    double sat = 0.0;
    for (const auto& r : per) {
        values.push_back(r.richness);
        out.richness += r.richness / d;
        out.lower += r.lower / d;
        out.upper += r.upper / d;
        mean_var += r.variance / d;
        sat += (r.richness > 0.0 ? kd / r.richness : 0.0) / d;
    }
    double spread = 0.0;
    for (double v : values) {
        spread += (v - out.richness) * (v - out.richness) / d;
    }
    out.variance = mean_var + spread;
    out.approx = 0.5 * (out.lower + out.upper);
    if (out.richness > 0.0) {
        out.saturation = sat;
        out.saturation_plugin = kd / out.richness;
    }
    std::sort(values.begin(), values.end());
    out.draws_summary = DrawSummary{out.richness, quantile_sorted(values, 0.025),
                                    quantile_sorted(values, 0.975), values.size()};
    return out;
}

double saturation(const SurvivalParams& p, std::size_t n, std::size_t k)
{
    const auto r = richness(p, n, k);
    if (r.infinite) {
        throw RegimeError("saturation is 0 under infinite richness; fit a model with "
                          "phi < 1 (ll3) or sigma < 0 to estimate a finite richness");
    }
    return *r.saturation;
}

double saturation(std::span<const SurvivalParams> draws, std::size_t n, std::size_t k)
{
    const auto r = richness(draws, n, k);
    if (r.infinite) {
        throw RegimeError("saturation is 0 under infinite richness (" + r.explanation +
                          "); fit a model with phi < 1 (ll3) or sigma < 0");
    }
    return *r.saturation;
}

std::size_t required_m(const SurvivalParams& p, std::size_t n, std::size_t k, double target)
{
    const auto r = richness(p, n, k);
    if (r.infinite) {
        throw RegimeError("required_m is undefined under infinite richness");
    }
    return search_required_m([&](std::size_t t) { return survival(p, static_cast<double>(t)); },
                             [&](std::size_t a) { return tail_from(p, a); }, n, k, r.richness,
                             target);
}

std::size_t required_m(std::span<const SurvivalParams> draws, std::size_t n, std::size_t k,
                       double target)
{
    const auto r = richness(draws, n, k);
    if (r.infinite) {
        throw RegimeError("required_m is undefined under infinite richness");
    }
    const double d = static_cast<double>(draws.size());
    return search_required_m(
        [&](std::size_t t) {
            double s = 0.0;
            for (const auto& p : draws) {
                s += survival(p, static_cast<double>(t));
            }
            return s / d;
        },
        [&](std::size_t a) {
            double s = 0.0;
            for (const auto& p : draws) {
                s += tail_from(p, a);
            }
            return s / d;
        },
        n, k, r.richness, target);
}

} // namespace accum
