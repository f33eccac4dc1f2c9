#include "accum/discovery.hpp"

#include <cmath>
#include <string_view>

namespace accum {

DiscoverySequence::DiscoverySequence(std::vector<std::uint8_t> indicators)
    : indicators_(std::move(indicators))
{
    if (indicators_.empty()) {
        throw InputError("empty sequence");
    }
    if (indicators_[0] != 1) {
        throw InputError("first indicator must be 1");
    }
    for (auto v : indicators_) {
        if (v > 1) {
            throw InputError("indicators must be 0 or 1");
        }
        discoveries_ += v;
    }
}

AccumulationCurve::AccumulationCurve(std::vector<std::size_t> counts)
    : counts_(std::move(counts))
{
    if (counts_.empty()) {
        throw InputError("empty sequence");
    }
    if (counts_[0] != 1) {
        throw InputError("accumulation curve must start at 1");
    }
    for (std::size_t i = 1; i < counts_.size(); ++i) {
        if (counts_[i] < counts_[i - 1] || counts_[i] - counts_[i - 1] > 1) {
            throw InputError("accumulation curve steps must be 0 or 1");
        }
    }
}

namespace {

std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

} // namespace

DiscoverySequence indicators_from_tags(std::span<const std::string> tags)
{
    if (tags.empty()) {
        throw InputError("empty sequence");
    }
    std::unordered_set<std::string_view> seen;
    std::vector<std::uint8_t> d;
    d.reserve(tags.size());
    for (const auto& tag : tags) {
        d.push_back(seen.insert(trim(tag)).second ? 1 : 0);
    }
    return DiscoverySequence(std::move(d));
}

AccumulationCurve curve_from_indicators(const DiscoverySequence& d)
{
    std::vector<std::size_t> counts(d.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        k += d[i];
        counts[i] = k;
    }
    return AccumulationCurve(std::move(counts));
}

DiscoverySequence indicators_from_curve(const AccumulationCurve& curve)
{
    std::vector<std::uint8_t> d(curve.size());
    d[0] = 1;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        d[i] = static_cast<std::uint8_t>(curve[i] - curve[i - 1]);
    }
    return DiscoverySequence(std::move(d));
}

SplitResult split(const DiscoverySequence& d, double fraction)
{
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw InputError("split fraction must lie in (0, 1)");
    }
    const auto n = d.size();
    const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    if (cut == 0) {
        throw InputError("split leaves an empty training set");
    }
    if (cut >= n) {
        throw InputError("split leaves an empty test set");
    }
    auto ind = d.indicators();
    std::vector<std::uint8_t> train(ind.begin(), ind.begin() + static_cast<std::ptrdiff_t>(cut));
    std::vector<std::uint8_t> test(ind.begin() + static_cast<std::ptrdiff_t>(cut), ind.end());
    return SplitResult{DiscoverySequence(std::move(train)), std::move(test)};
}

DiscoverySequence concatenate(const DiscoverySequence& train, std::span<const std::uint8_t> test)
{
    std::vector<std::uint8_t> d(train.indicators().begin(), train.indicators().end());
    d.insert(d.end(), test.begin(), test.end());
    return DiscoverySequence(std::move(d));
}

void check_ingest(const DiscoverySequence& d, const IngestOptions& opts)
{
    if (d.size() < opts.min_length) {
        throw InputError("sequence of length " + std::to_string(d.size()) +
                         " is shorter than the minimum " + std::to_string(opts.min_length));
    }
}

SiteDataset::SiteDataset(std::vector<Site> sites)
    : sites_(std::move(sites))
{
    if (sites_.empty()) {
        throw InputError("site dataset is empty");
    }
    p_ = sites_.front().covariates.size();
    if (p_ == 0) {
        throw InputError("covariate vectors must have length >= 1");
    }
    std::unordered_set<std::string> ids;
    for (const auto& s : sites_) {
        if (s.covariates.size() != p_) {
            throw InputError("site '" + s.id + "' has covariate dimension " +
                             std::to_string(s.covariates.size()) + ", expected " +
                             std::to_string(p_));
        }
        if (!ids.insert(s.id).second) {
            throw InputError("duplicate site id '" + s.id + "'");
        }
    }
}

} // namespace accum
