#include "accum/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace accum::io {

namespace {

std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> content_lines(const std::string& text)
{
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        lines.emplace_back(t);
    }
    return lines;
}

long long parse_int(std::string_view s, const std::string& what)
{
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw InputError("invalid integer '" + std::string(s) + "' in " + what);
    }
    return v;
}

double parse_real(std::string_view s, const std::string& what)
{
    try {
        std::size_t used = 0;
        std::string tmp(s);
        double v = std::stod(tmp, &used);
        if (used != tmp.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw InputError("invalid number '" + std::string(s) + "' in " + what);
    }
}

void expect_header(const std::vector<std::string_view>& got,
                   const std::vector<std::string_view>& want,
                   const std::string& what)
{
    if (got != want) {
        std::string w;
        for (auto f : want) {
            w += (w.empty() ? "" : ",") + std::string(f);
        }
        throw InputError(what + ": expected header '" + w + "'");
    }
}

std::uint8_t parse_discovery(std::string_view s, const std::string& what)
{
    const auto v = parse_int(s, what);
    if (v != 0 && v != 1) {
        throw InputError("discovery value must be 0 or 1 in " + what);
    }
    return static_cast<std::uint8_t>(v);
}

} // namespace

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read file '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write file '" + path.string() + "'");
    }
    out << contents;
}

std::vector<std::string> read_tag_file(const std::filesystem::path& path)
{
    auto tags = content_lines(read_file(path));
    if (tags.empty()) {
        throw InputError("empty sequence in '" + path.string() + "'");
    }
    return tags;
}

void write_tag_file(const std::filesystem::path& path, std::span<const std::string> tags)
{
    std::string out;
    for (const auto& t : tags) {
        out += t;
        out += '\n';
    }
    write_file(path, out);
}

namespace {

DiscoverySequence parse_indicator_lines(const std::vector<std::string>& lines, const std::string& what)
{
    if (lines.empty()) {
        throw InputError("empty file '" + what + "'");
    }
    expect_header(split_fields(lines[0]), {"index", "discovery"}, what);
    std::vector<std::uint8_t> d;
    d.reserve(lines.size() - 1);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto f = split_fields(lines[r]);
        if (f.size() != 2) {
            throw InputError(what + ": row " + std::to_string(r) + " must have 2 fields");
        }
        if (parse_int(f[0], what) != static_cast<long long>(r)) {
            throw InputError(what + ": indices must run 1..n in order");
        }
        d.push_back(parse_discovery(f[1], what));
    }
    if (d.empty()) {
        throw InputError("empty sequence in '" + what + "'");
    }
    return DiscoverySequence(std::move(d));
}

} // namespace

DiscoverySequence read_indicator_csv(const std::filesystem::path& path, const IngestOptions& opts)
{
    auto d = parse_indicator_lines(content_lines(read_file(path)), path.string());
    check_ingest(d, opts);
    return d;
}

DiscoverySequence read_sequence(const std::filesystem::path& path, const IngestOptions& opts)
{
    auto lines = content_lines(read_file(path));
    if (lines.empty()) {
        throw InputError("empty sequence in '" + path.string() + "'");
    }
    if (split_fields(lines[0]) == std::vector<std::string_view>{"index", "discovery"}) {
        auto d = parse_indicator_lines(lines, path.string());
        check_ingest(d, opts);
        return d;
    }
    auto d = indicators_from_tags(lines);
    check_ingest(d, opts);
    return d;
}

void write_indicator_csv(const std::filesystem::path& path, const DiscoverySequence& d)
{
    std::string out = "index,discovery\n";
    out.reserve(d.size() * 10);
    for (std::size_t i = 0; i < d.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        out += static_cast<char>('0' + d[i]);
        out += '\n';
    }
    write_file(path, out);
}

SiteDataset read_site_dataset(const std::filesystem::path& sites_csv,
                              const std::filesystem::path& covariates_csv,
                              const IngestOptions& opts)
{
    const auto what = sites_csv.string();
    const auto lines = content_lines(read_file(sites_csv));
    if (lines.empty()) {
        throw InputError("empty file '" + what + "'");
    }
    expect_header(split_fields(lines[0]), {"site_id", "index", "discovery"}, what);

    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<long long, std::uint8_t>>> rows;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto f = split_fields(lines[r]);
        if (f.size() != 3) {
            throw InputError(what + ": row " + std::to_string(r) + " must have 3 fields");
        }
        std::string id(f[0]);
        auto [it, inserted] = rows.try_emplace(id);
        if (inserted) {
            order.push_back(id);
        }
        it->second.emplace_back(parse_int(f[1], what), parse_discovery(f[2], what));
    }

    const auto cwhat = covariates_csv.string();
    const auto clines = content_lines(read_file(covariates_csv));
    if (clines.empty()) {
        throw InputError("empty file '" + cwhat + "'");
    }
    const auto header = split_fields(clines[0]);
    if (header.size() < 2 || header[0] != "site_id") {
        throw InputError(cwhat + ": expected header 'site_id,z1,...,zp'");
    }
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j] != "z" + std::to_string(j)) {
            throw InputError(cwhat + ": expected header 'site_id,z1,...,zp'");
        }
    }
    std::map<std::string, std::vector<double>> covariates;
    for (std::size_t r = 1; r < clines.size(); ++r) {
        const auto f = split_fields(clines[r]);
        if (f.size() != header.size()) {
            throw InputError(cwhat + ": row " + std::to_string(r) + " has " +
                             std::to_string(f.size()) + " fields, expected " +
                             std::to_string(header.size()));
        }
        std::vector<double> z;
        for (std::size_t j = 1; j < f.size(); ++j) {
            z.push_back(parse_real(f[j], cwhat));
        }
        covariates[std::string(f[0])] = std::move(z);
    }

    std::vector<Site> sites;
    for (const auto& id : order) {
        auto& entries = rows[id];
        std::sort(entries.begin(), entries.end());
        std::vector<std::uint8_t> d;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].first != static_cast<long long>(i + 1)) {
                throw InputError(what + ": indices of site '" + id + "' must run 1..n");
            }
            d.push_back(entries[i].second);
        }
        DiscoverySequence seq(std::move(d));
        if (opts.exclude_below > 0 && seq.size() < opts.exclude_below) {
            continue;
        }
        check_ingest(seq, opts);
        auto cit = covariates.find(id);
        if (cit == covariates.end()) {
            throw InputError(cwhat + ": no covariates for site '" + id + "'");
        }
        sites.push_back(Site{id, std::move(seq), cit->second});
    }
    return SiteDataset(std::move(sites));
}

void write_site_dataset(const std::filesystem::path& sites_csv,
                        const std::filesystem::path& covariates_csv,
                        const SiteDataset& data)
{
    std::string out = "site_id,index,discovery\n";
    for (const auto& s : data.sites()) {
        for (std::size_t i = 0; i < s.sequence.size(); ++i) {
            out += s.id + ',' + std::to_string(i + 1) + ',' +
                   static_cast<char>('0' + s.sequence[i]) + '\n';
        }
    }
    write_file(sites_csv, out);

    std::string cov = "site_id";
    for (std::size_t j = 1; j <= data.covariate_dim(); ++j) {
        cov += ",z" + std::to_string(j);
    }
    cov += '\n';
    for (const auto& s : data.sites()) {
        cov += s.id;
        for (double z : s.covariates) {
            cov += ',' + format_real(z);
        }
        cov += '\n';
    }
    write_file(covariates_csv, cov);
}

std::string content_hash(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_hash(const std::filesystem::path& path)
{
    return content_hash(read_file(path));
}

std::string format_real(double x)
{
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace accum::io
