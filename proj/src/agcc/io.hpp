// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "agcc/series.hpp"

namespace agcc::io {

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

// Strict full-token parse; throws ParseError naming `where`.
double parse_double(std::string_view token, const std::string& where);
long long parse_int(std::string_view token, const std::string& where);

// Shortest representation that round-trips through parse_double.
std::string format_double(double v);

std::string read_text(const std::filesystem::path& path);
// Creates parent directories as needed.
void write_text(const std::filesystem::path& path, std::string_view content);
void ensure_dir(const std::filesystem::path& dir);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

// Comma-separated text with a header line. Fields are never quoted, so they
// must not contain commas or newlines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Throws ParseError naming `where` and the line on ragged rows.
CsvTable parse_csv_table(std::string_view text, const std::string& where);
std::string csv_table_to_text(const CsvTable& t);

// Headerless numeric CSV, one row per frame.
Series read_series_csv(const std::filesystem::path& path);
std::string series_to_csv(const Series& s);

// Little-endian f32 matrix, row-major, no header.
std::vector<float> read_f32_le(const std::filesystem::path& path, std::size_t count);
void write_f32_le(const std::filesystem::path& path, const std::vector<float>& values);

}  // namespace agcc::io
