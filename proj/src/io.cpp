#include "silfdtd/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "silfdtd/error.hpp"

namespace silfdtd::io {

std::string format_number(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t CsvTable::index_of(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(ErrorCategory::Config, "missing CSV column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const std::size_t k = index_of(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[k]);
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::Io, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split(t);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      fail(ErrorCategory::Config, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                      std::to_string(table.header.size()) + " columns");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size()) {
        fail(ErrorCategory::Config, path.string() + ":" + std::to_string(line_no) + ": '" + c +
                                        "' is not a number");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) fail(ErrorCategory::Config, path.string() + " has no header line");
  return table;
}

void require_columns(const CsvTable& table, const std::vector<std::string>& names,
                     const std::filesystem::path& path) {
  if (table.header != names) {
    std::string want;
    for (const auto& n : names) want += (want.empty() ? "" : ",") + n;
    fail(ErrorCategory::Config, path.string() + ": expected columns " + want);
  }
}

std::vector<std::string> provenance_comments(const std::string& config_hash) {
  return {std::string("tool: ") + kToolVersion, "config_hash: " + config_hash};
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ofstream out = open_out(path);
  for (const auto& c : comments) out << "# " << c << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << "\n";
  }
  if (!out) fail(ErrorCategory::Io, "failed writing " + path.string());
}

void write_pgm(const std::filesystem::path& path, const Eigen::ArrayXXd& values, int max_value,
               const std::vector<std::string>& comments) {
  if (max_value != 255 && max_value != 65535) fail(ErrorCategory::Config, "PGM depth must be 8 or 16 bit");
  std::ofstream out = open_out(path);
  out << "P2\n";
  for (const auto& c : comments) out << "# " << c << "\n";
  out << values.cols() << " " << values.rows() << "\n" << max_value << "\n";
  for (Eigen::Index r = values.rows() - 1; r >= 0; --r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = std::clamp(values(r, c), 0.0, 1.0);
      out << (c ? " " : "") << static_cast<int>(std::lround(v * max_value));
    }
    out << "\n";
  }
  if (!out) fail(ErrorCategory::Io, "failed writing " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) fail(ErrorCategory::Io, "failed writing " + path.string());
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCategory::Io, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace silfdtd::io
