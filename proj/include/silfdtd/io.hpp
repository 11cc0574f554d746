#pragma once

// Plain-text artifacts: CSV tables with comment headers and PGM images.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace silfdtd::io {

inline constexpr const char* kToolVersion = "silfdtd 0.1.0";

/// Up to 9 significant digits, trailing zeros dropped.
std::string format_number(double value);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column by header name; a Config error if it is missing.
  std::vector<double> column(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;
};

/// Reads a numeric CSV. Lines starting with '#' and blank lines are skipped;
/// the first remaining line is the header.
CsvTable read_csv(const std::filesystem::path& path);

/// Requires the table to have exactly these columns, in order.
void require_columns(const CsvTable& table, const std::vector<std::string>& names,
                     const std::filesystem::path& path);

/// Every artifact starts with these comment lines.
std::vector<std::string> provenance_comments(const std::string& config_hash);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

/// Grayscale P2 image. `values` in [0, 1] are scaled to `max_value`
/// (255 or 65535). Row 0 of `values` is written as the bottom image row.
void write_pgm(const std::filesystem::path& path, const Eigen::ArrayXXd& values, int max_value,
               const std::vector<std::string>& comments);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Creates `dir` and parents; an Io error on failure.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace silfdtd::io
