#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace specgrad::cli {

/// Shortest decimal string that parses back to the same double. Scientific
/// notation when |x| < 1e-3 or |x| >= 1e6 (zero prints as "0"); "inf",
/// "-inf" and "nan" for non-finite values.
std::string format_number(double x);

/// Inverse of format_number. Throws std::invalid_argument on malformed text.
double parse_number(std::string_view text);

/// Splits "a,b,c" and parses each piece with parse_number.
std::vector<double> parse_number_list(std::string_view text);

/// A CSV file with "# key=value" preamble lines before the header row.
struct CsvDocument {
  std::vector<std::pair<std::string, std::string>> preamble;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Value of a preamble key; throws std::out_of_range if absent.
  const std::string& meta(std::string_view key) const;
  /// Index of a header column; throws std::out_of_range if absent.
  std::size_t column(std::string_view name) const;
};

/// Fields containing a comma, quote or newline are quoted.
std::string to_csv(const CsvDocument& doc);
CsvDocument parse_csv(std::string_view text);

}  // namespace specgrad::cli
