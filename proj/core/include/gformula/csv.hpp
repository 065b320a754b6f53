#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gformula {

// 17 significant digits; round-trips every double.
std::string format_double(double x);
// Shortest representation that round-trips (labels, ids).
std::string format_short(double x);

// Comma-separated table with a header row. Fields may be double-quoted with
// "" escaping; surrounding whitespace of unquoted fields is trimmed.
class CsvTable {
 public:
  static CsvTable parse(std::istream& in, const std::string& source = "<input>");
  static CsvTable read(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }
  const std::string& source() const { return source_; }

  std::optional<std::size_t> column(std::string_view name) const;
  // Throws Error(schema) naming the missing column.
  std::size_t require_column(std::string_view name) const;

  const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
  // File line number of a data row, for diagnostics.
  std::size_t line(std::size_t row) const { return lines_[row]; }

  // Checked conversions; Error(data) carries the source, line and column.
  double number(std::size_t row, std::size_t col) const;
  std::optional<double> optional_number(std::size_t row, std::size_t col) const;
  int integer(std::size_t row, std::size_t col) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return text_; }

 private:
  void append(const std::vector<std::string>& fields);
  std::size_t width_;
  std::string text_;
};

// Writes via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace gformula
