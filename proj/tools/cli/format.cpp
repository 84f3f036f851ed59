#include "cli/format.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace specgrad::cli {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  const double mag = std::abs(x);
  const auto fmt = (mag < 1e-3 || mag >= 1e6) ? std::chars_format::scientific : std::chars_format::fixed;
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, fmt);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

double parse_number(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size())
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  return value;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t stop = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(parse_number(text.substr(start, stop - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

const std::string& CsvDocument::meta(std::string_view key) const {
  for (const auto& [k, v] : preamble)
    if (k == key) return v;
  throw std::out_of_range("no preamble key '" + std::string(key) + "'");
}

std::size_t CsvDocument::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::out_of_range("no column '" + std::string(name) + "'");
}

namespace {

void write_field(std::ostringstream& out, const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

void write_row(std::ostringstream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    write_field(out, row[i]);
  }
  out << '\n';
}

// Parses one record starting at `pos`; advances past its line break.
std::vector<std::string> read_row(std::string_view text, std::size_t& pos) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          field += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw std::invalid_argument("unterminated quoted CSV field");
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

std::string to_csv(const CsvDocument& doc) {
  std::ostringstream out;
  for (const auto& [k, v] : doc.preamble) out << "# " << k << '=' << v << '\n';
  write_row(out, doc.header);
  for (const auto& row : doc.rows) write_row(out, row);
  return out.str();
}

CsvDocument parse_csv(std::string_view text) {
  CsvDocument doc;
  std::size_t pos = 0;
  while (pos < text.size() && text[pos] == '#') {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos + 1, eol - pos - 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("preamble line without '='");
    doc.preamble.emplace_back(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
    pos = eol + 1;
  }
  if (pos >= text.size()) throw std::invalid_argument("CSV has no header row");
  doc.header = read_row(text, pos);
  while (pos < text.size()) {
    auto row = read_row(text, pos);
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != doc.header.size())
      throw std::invalid_argument("CSV row width differs from the header");
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

}  // namespace specgrad::cli
