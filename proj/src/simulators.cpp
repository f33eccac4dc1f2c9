#include "accum/simulators.hpp"

#include <algorithm>
#include <cmath>

#include "accum/error.hpp"

namespace accum {

namespace {

void check_length(std::size_t n)
{
    if (n == 0) {
        throw DomainError("sequence length n must be at least 1");
    }
}

void check_pitman_yor(double alpha, double sigma)
{
    if (!(sigma >= 0.0 && sigma < 1.0)) {
        throw DomainError("Pitman-Yor requires sigma in [0, 1)");
    }
    if (!(alpha > -sigma) || !std::isfinite(alpha)) {
        throw DomainError("Pitman-Yor requires alpha > -sigma");
    }
}

// Sequential urn shared by the Pitman-Yor family. For sigma >= 0 an existing
// tag is drawn by picking a uniform past observation (weight n_j) and
// accepting it with probability (n_j - sigma) / n_j. For sigma < 0 the weight
// n_j + |sigma| is a mixture of a uniform past observation and a uniform tag.
TagSequence run_urn(double alpha, double sigma, std::size_t n, Rng& rng)
{
    TagSequence labels;
    labels.reserve(n);
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < n; ++i) {
        const double k = static_cast<double>(counts.size());
        const double prev = static_cast<double>(i);
        const double p_new = i == 0 ? 1.0 : std::max(0.0, (alpha + k * sigma) / (alpha + prev));
        std::uint32_t tag = 0;
        if (rng.uniform() < p_new) {
            counts.push_back(0);
            tag = static_cast<std::uint32_t>(counts.size());
        } else if (sigma >= 0.0) {
            for (;;) {
                const std::uint32_t cand = labels[rng.index(i)];
                const double nj = static_cast<double>(counts[cand - 1]);
                if (sigma == 0.0 || rng.uniform() < (nj - sigma) / nj) {
                    tag = cand;
                    break;
                }
            }
        } else {
            const double from_obs = prev / (prev - k * sigma);
            if (rng.uniform() < from_obs) {
                tag = labels[rng.index(i)];
            } else {
                tag = static_cast<std::uint32_t>(rng.index(counts.size()) + 1);
            }
        }
        ++counts[tag - 1];
        labels.push_back(tag);
    }
    return labels;
}

} // namespace

TagSequence simulate_dirichlet(double alpha, std::size_t n, std::uint64_t seed, std::uint64_t stream)
{
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw DomainError("Dirichlet requires alpha > 0");
    }
    check_length(n);
    Rng rng(seed, stream);
    TagSequence labels;
    labels.reserve(n);
    std::uint32_t next = 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double p_new = alpha / (alpha + static_cast<double>(i));
        if (i == 0 || rng.uniform() < p_new) {
            labels.push_back(next++);
        } else {
            labels.push_back(labels[rng.index(i)]);
        }
    }
    return labels;
}

TagSequence simulate_pitman_yor(double alpha, double sigma, std::size_t n, std::uint64_t seed,
                                std::uint64_t stream)
{
    check_pitman_yor(alpha, sigma);
    check_length(n);
    Rng rng(seed, stream);
    return run_urn(alpha, sigma, n, rng);
}

TagSequence simulate_dirichlet_multinomial(double sigma, std::size_t H, std::size_t n,
                                           std::uint64_t seed, std::uint64_t stream)
{
    if (!(sigma < 0.0) || !std::isfinite(sigma)) {
        throw DomainError("Dirichlet-multinomial requires sigma < 0");
    }
    if (H == 0) {
        throw DomainError("Dirichlet-multinomial requires H >= 1");
    }
    check_length(n);
    Rng rng(seed, stream);
    return run_urn(static_cast<double>(H) * -sigma, sigma, n, rng);
}

TagSequence simulate_zipf(std::size_t H, double shape, std::size_t n, std::uint64_t seed,
                          std::uint64_t stream)
{
    if (H == 0) {
        throw DomainError("Zipf requires H >= 1");
    }
    if (!(shape > 0.0) || !std::isfinite(shape)) {
        throw DomainError("Zipf requires shape > 0");
    }
    check_length(n);
    std::vector<double> cdf(H);
    double total = 0.0;
    for (std::size_t j = 0; j < H; ++j) {
        total += std::pow(static_cast<double>(j + 1), -shape);
        cdf[j] = total;
    }
    Rng rng(seed, stream);
    TagSequence species(n);
    for (auto& s : species) {
        const double u = rng.uniform() * total;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        s = static_cast<std::uint32_t>(std::min<std::size_t>(it - cdf.begin(), H - 1) + 1);
    }
    // Relabel by first appearance.
    std::vector<std::uint32_t> relabel(H + 1, 0);
    std::uint32_t next = 1;
    for (auto& s : species) {
        if (relabel[s] == 0) {
            relabel[s] = next++;
        }
        s = relabel[s];
    }
    return species;
}

DiscoverySequence simulate_from_model(const SurvivalParams& p, std::size_t n, std::uint64_t seed,
                                      std::uint64_t stream)
{
    check_length(n);
    const auto probs = discovery_probs(p, n);
    Rng rng(seed, stream);
    std::vector<std::uint8_t> d(n);
    d[0] = 1;
    for (std::size_t i = 1; i < n; ++i) {
        d[i] = rng.bernoulli(probs[i]) ? 1 : 0;
    }
    return DiscoverySequence(std::move(d));
}

std::vector<double> pitman_yor_weights(double alpha, double sigma,
                                       const std::vector<std::size_t>& counts)
{
    double total = 0.0;
    for (std::size_t c : counts) {
        total += static_cast<double>(c);
    }
    const double denom = alpha + total;
    const double k = static_cast<double>(counts.size());
    std::vector<double> w;
    w.reserve(counts.size() + 1);
    w.push_back(std::max(0.0, (alpha + k * sigma) / denom));
    for (std::size_t c : counts) {
        w.push_back((static_cast<double>(c) - sigma) / denom);
    }
    return w;
}

std::vector<std::string> render_tags(const TagSequence& tags)
{
    std::vector<std::string> out;
    out.reserve(tags.size());
    for (auto t : tags) {
        out.push_back(std::to_string(t));
    }
    return out;
}

DiscoverySequence indicators_of(const TagSequence& tags)
{
    return indicators_from_labels<std::uint32_t>(tags);
}

std::string_view to_string(GeneratorKind k)
{
    switch (k) {
    case GeneratorKind::Dirichlet: return "dirichlet";
    case GeneratorKind::PitmanYor: return "pitman-yor";
    case GeneratorKind::DirichletMultinomial: return "dirichlet-multinomial";
    case GeneratorKind::Zipf: return "zipf";
    case GeneratorKind::SurvivalModel: return "model";
    }
    return "unknown";
}

GeneratorKind generator_kind_from_string(std::string_view s)
{
    if (s == "dirichlet" || s == "dp") return GeneratorKind::Dirichlet;
    if (s == "pitman-yor" || s == "pitman_yor" || s == "py") return GeneratorKind::PitmanYor;
    if (s == "dirichlet-multinomial" || s == "dirichlet_multinomial" || s == "dm")
        return GeneratorKind::DirichletMultinomial;
    if (s == "zipf") return GeneratorKind::Zipf;
    if (s == "model" || s == "ll") return GeneratorKind::SurvivalModel;
    throw InputError("unknown generator kind '" + std::string(s) +
                     "' (expected dirichlet, pitman-yor, dirichlet-multinomial, zipf or model)");
}

void GeneratorSpec::validate() const
{
    const auto require = [this](bool present, const char* name) {
        if (!present) {
            throw InputError(std::string(to_string(kind)) + " generator needs --" + name);
        }
    };
    check_length(n);
    switch (kind) {
    case GeneratorKind::Dirichlet:
        require(alpha.has_value(), "alpha");
        if (!(*alpha > 0.0)) {
            throw DomainError("Dirichlet requires alpha > 0");
        }
        break;
    case GeneratorKind::PitmanYor:
        require(alpha.has_value(), "alpha");
        require(sigma.has_value(), "sigma");
        check_pitman_yor(*alpha, *sigma);
        break;
    case GeneratorKind::DirichletMultinomial:
        require(sigma.has_value(), "sigma");
        require(H.has_value(), "H");
        if (!(*sigma < 0.0)) {
            throw DomainError("Dirichlet-multinomial requires sigma < 0");
        }
        if (*H == 0) {
            throw DomainError("Dirichlet-multinomial requires H >= 1");
        }
        break;
    case GeneratorKind::Zipf:
        require(H.has_value(), "H");
        require(shape.has_value(), "shape");
        if (*H == 0 || !(*shape > 0.0)) {
            throw DomainError("Zipf requires H >= 1 and shape > 0");
        }
        break;
    case GeneratorKind::SurvivalModel:
        require(params.has_value(), "family/alpha");
        break;
    }
}

TagSequence generate(const GeneratorSpec& spec)
{
    spec.validate();
    switch (spec.kind) {
    case GeneratorKind::Dirichlet: return simulate_dirichlet(*spec.alpha, spec.n, spec.seed);
    case GeneratorKind::PitmanYor:
        return simulate_pitman_yor(*spec.alpha, *spec.sigma, spec.n, spec.seed);
    case GeneratorKind::DirichletMultinomial:
        return simulate_dirichlet_multinomial(*spec.sigma, *spec.H, spec.n, spec.seed);
    case GeneratorKind::Zipf: return simulate_zipf(*spec.H, *spec.shape, spec.n, spec.seed);
    case GeneratorKind::SurvivalModel: break;
    }
    const auto d = simulate_from_model(*spec.params, spec.n, spec.seed);
    // Repeats reuse a uniformly chosen earlier label; only distinctness matters.
    Rng rng(spec.seed, 1);
    TagSequence tags;
    tags.reserve(d.size());
    std::uint32_t next = 1;
    for (std::size_t i = 0; i < d.size(); ++i) {
        tags.push_back(d[i] ? next++ : tags[rng.index(i)]);
    }
    return tags;
}

} // namespace accum
