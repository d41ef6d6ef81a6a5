#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pmsmopt {

inline constexpr std::string_view kToolVersion = "0.3.0";

/// Shortest round-trip decimal representation ("nan", "inf", "-inf" for
/// non-finite values). Locale independent.
std::string format_double(double value);

/// Strict parse of a decimal or non-finite token written by format_double.
double parse_double(std::string_view text);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

/// Writes to "<path>.tmp" and renames over path. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace pmsmopt
