#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "accum/error.hpp"

namespace accum {

/// Ordered discovery indicators D_1..D_n. D_1 is always 1 because the first
/// observation is necessarily new.
class DiscoverySequence {
public:
    explicit DiscoverySequence(std::vector<std::uint8_t> indicators);

    std::size_t size() const { return indicators_.size(); }
    // Number of distinct entities K_n.
    std::size_t discoveries() const { return discoveries_; }
    std::span<const std::uint8_t> indicators() const { return indicators_; }
    std::uint8_t operator[](std::size_t i) const { return indicators_[i]; }

    bool operator==(const DiscoverySequence&) const = default;

private:
    std::vector<std::uint8_t> indicators_;
    std::size_t discoveries_ = 0;
};

/// Cumulative distinct counts K_1..K_n; K_1 = 1 and every step is 0 or 1.
class AccumulationCurve {
public:
    explicit AccumulationCurve(std::vector<std::size_t> counts);

    std::size_t size() const { return counts_.size(); }
    std::span<const std::size_t> counts() const { return counts_; }
    std::size_t operator[](std::size_t i) const { return counts_[i]; }

    bool operator==(const AccumulationCurve&) const = default;

private:
    std::vector<std::size_t> counts_;
};

/// Tags are compared by exact string equality after trimming surrounding
/// whitespace. Order is preserved.
DiscoverySequence indicators_from_tags(std::span<const std::string> tags);

template <class Label>
DiscoverySequence indicators_from_labels(std::span<const Label> labels)
{
    if (labels.empty()) {
        throw InputError("empty sequence");
    }
    std::unordered_set<Label> seen;
    std::vector<std::uint8_t> d;
    d.reserve(labels.size());
    for (const auto& label : labels) {
        d.push_back(seen.insert(label).second ? 1 : 0);
    }
    return DiscoverySequence(std::move(d));
}

AccumulationCurve curve_from_indicators(const DiscoverySequence& d);
DiscoverySequence indicators_from_curve(const AccumulationCurve& curve);

/// The test block continues the training sequence, so it may start with 0 and
/// is kept as raw indicators rather than a DiscoverySequence.
struct SplitResult {
    DiscoverySequence train;
    std::vector<std::uint8_t> test;
};

/// Prefix split: train holds the first floor(fraction * n) indicators.
SplitResult split(const DiscoverySequence& d, double fraction);
DiscoverySequence concatenate(const DiscoverySequence& train, std::span<const std::uint8_t> test);

/// Knobs applied when sequences enter the system from files.
struct IngestOptions {
    // Sequences shorter than this are rejected with an InputError.
    std::size_t min_length = 2;
    // When set, multi-site ingestion silently drops sites shorter than this.
    std::size_t exclude_below = 0;
};

void check_ingest(const DiscoverySequence& d, const IngestOptions& opts);

struct Site {
    std::string id;
    DiscoverySequence sequence;
    std::vector<double> covariates;
};

/// L discovery sequences sharing a covariate dimension p >= 1. By convention
/// the first covariate is an intercept column.
class SiteDataset {
public:
    explicit SiteDataset(std::vector<Site> sites);

    std::span<const Site> sites() const { return sites_; }
    std::size_t size() const { return sites_.size(); }
    std::size_t covariate_dim() const { return p_; }
    const Site& operator[](std::size_t i) const { return sites_[i]; }

private:
    std::vector<Site> sites_;
    std::size_t p_ = 0;
};

} // namespace accum
