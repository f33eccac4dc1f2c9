#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "accum/discovery.hpp"

namespace accum::io {

// Tag file: one tag per line, UTF-8; lines starting with '#' and blank lines
// are skipped.
std::vector<std::string> read_tag_file(const std::filesystem::path& path);
void write_tag_file(const std::filesystem::path& path, std::span<const std::string> tags);

// Indicator CSV with header `index,discovery`; indices run 1..n in order.
DiscoverySequence read_indicator_csv(const std::filesystem::path& path,
                                     const IngestOptions& opts = {});
void write_indicator_csv(const std::filesystem::path& path, const DiscoverySequence& d);

// Reads either format, choosing by the first non-comment line: a CSV header
// `index,discovery` selects the indicator reader, anything else is a tag file.
DiscoverySequence read_sequence(const std::filesystem::path& path, const IngestOptions& opts = {});

// Multi-site data: `site_id,index,discovery` plus covariates `site_id,z1,...,zp`.
SiteDataset read_site_dataset(const std::filesystem::path& sites_csv,
                              const std::filesystem::path& covariates_csv,
                              const IngestOptions& opts = {});
void write_site_dataset(const std::filesystem::path& sites_csv,
                        const std::filesystem::path& covariates_csv,
                        const SiteDataset& data);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// 64-bit FNV-1a digest rendered as 16 hex digits; used to tie artifacts to data.
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

// Shortest round-trip formatting with 17 significant digits.
std::string format_real(double x);

} // namespace accum::io
