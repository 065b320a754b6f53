#include "gformula/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gformula/error.hpp"

namespace gformula {

std::string format_double(double x) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

std::string format_short(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one record; a quoted field may span lines, so more input is pulled
// from `in` as needed.
std::vector<std::string> split_record(std::string line, std::istream& in, std::size_t& line_no,
                                      const std::string& source) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (!quoted) break;
      std::string more;
      if (!std::getline(in, more))
        throw Error(ErrorKind::data, source + ": unterminated quoted field near line " +
                                         std::to_string(line_no));
      ++line_no;
      field += '\n';
      line = std::move(more);
      i = 0;
      continue;
    }
    const char c = line[i++];
    if (quoted) {
      if (c == '"') {
        if (i < line.size() && line[i] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : std::string(trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (!was_quoted && !field.empty() && field.back() == '\r') field.pop_back();
  fields.push_back(was_quoted ? field : std::string(trim(field)));
  return fields;
}

std::string location(const CsvTable& t, std::size_t row, std::size_t col) {
  return t.source() + " line " + std::to_string(t.line(row)) + ", column '" + t.header()[col] + "'";
}

}  // namespace

CsvTable CsvTable::parse(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source_ = source;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t start = line_no;
    if (trim(line).empty()) continue;
    auto fields = split_record(line, in, line_no, source);
    if (!have_header) {
      if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
      t.header_ = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header_.size())
      throw Error(ErrorKind::data, source + " line " + std::to_string(start) + ": expected " +
                                       std::to_string(t.header_.size()) + " fields, found " +
                                       std::to_string(fields.size()));
    t.rows_.push_back(std::move(fields));
    t.lines_.push_back(start);
  }
  if (!have_header) throw Error(ErrorKind::schema, source + ": missing header row");
  return t;
}

CsvTable CsvTable::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, "cannot open " + path.string());
  return parse(in, path.string());
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name) const {
  if (auto c = column(name)) return *c;
  throw Error(ErrorKind::schema, source_ + ": missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  if (auto v = optional_number(row, col)) return *v;
  throw Error(ErrorKind::data, location(*this, row, col) + ": missing value");
}

std::optional<double> CsvTable::optional_number(std::size_t row, std::size_t col) const {
  const std::string& text = cell(row, col);
  if (text.empty() || text == "NA") return std::nullopt;
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    throw Error(ErrorKind::data, location(*this, row, col) + ": not a finite number: '" + text + "'");
  return v;
}

int CsvTable::integer(std::size_t row, std::size_t col) const {
  const double v = number(row, col);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw Error(ErrorKind::data, location(*this, row, col) + ": not an integer: '" + cell(row, col) + "'");
  return static_cast<int>(v);
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : width_(header.size()) {
  append(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw Error(ErrorKind::state, "csv row width mismatch");
  append(fields);
}

void CsvWriter::append(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) text_ += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      text_ += f;
      continue;
    }
    text_ += '"';
    for (char c : f) {
      if (c == '"') text_ += '"';
      text_ += c;
    }
    text_ += '"';
  }
  text_ += '\n';
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::config, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error(ErrorKind::config, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::config, "cannot rename " + tmp.string() + " to " + path.string() + ": " +
                                       ec.message());
  }
}

}  // namespace gformula
