#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "accum/discovery.hpp"
#include "accum/rng.hpp"
#include "accum/survival.hpp"

namespace accum {

// Generated tags are consecutive integer labels 1, 2, ... in order of first
// appearance. Each generator owns its Rng(seed, stream); reruns with the same
// arguments reproduce the sequence exactly.
using TagSequence = std::vector<std::uint32_t>;

TagSequence simulate_dirichlet(double alpha, std::size_t n, std::uint64_t seed,
                               std::uint64_t stream = 0);

/// sigma in [0, 1), alpha > -sigma.
TagSequence simulate_pitman_yor(double alpha, double sigma, std::size_t n, std::uint64_t seed,
                                std::uint64_t stream = 0);

/// Pitman-Yor urn with sigma < 0 and alpha = H |sigma|: at most H distinct tags.
TagSequence simulate_dirichlet_multinomial(double sigma, std::size_t H, std::size_t n,
                                           std::uint64_t seed, std::uint64_t stream = 0);

/// Independent draws with pr(j) proportional to j^(-shape), j = 1..H.
TagSequence simulate_zipf(std::size_t H, double shape, std::size_t n, std::uint64_t seed,
                          std::uint64_t stream = 0);

/// Independent discovery indicators with pr(D_i = 1) = S(i - 1).
DiscoverySequence simulate_from_model(const SurvivalParams& p, std::size_t n, std::uint64_t seed,
                                      std::uint64_t stream = 0);

/// Pitman-Yor predictive weights given the table sizes: element 0 is the
/// new-tag probability, element j the probability of existing tag j.
std::vector<double> pitman_yor_weights(double alpha, double sigma,
                                       const std::vector<std::size_t>& counts);

std::vector<std::string> render_tags(const TagSequence& tags);
DiscoverySequence indicators_of(const TagSequence& tags);

enum class GeneratorKind { Dirichlet, PitmanYor, DirichletMultinomial, Zipf, SurvivalModel };

std::string_view to_string(GeneratorKind k);
GeneratorKind generator_kind_from_string(std::string_view s);

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::Dirichlet;
    std::optional<double> alpha;
    std::optional<double> sigma;
    std::optional<std::size_t> H;
    std::optional<double> shape;
    std::optional<SurvivalParams> params;
    std::size_t n = 0;
    std::uint64_t seed = 0;

    // Throws InputError for missing parameters, DomainError for invalid ones.
    void validate() const;
};

/// Tag sequence for the urn and Zipf kinds; SurvivalModel yields indicators
/// only, rendered as tags through fresh labels for discoveries.
TagSequence generate(const GeneratorSpec& spec);

} // namespace accum
