#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mabo {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Minimal CSV writer: fixed header, one call per row, no quoting needed
/// because all fields are numeric or simple identifiers.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);

  CsvWriter& field(double value);
  CsvWriter& field(long long value);
  CsvWriter& field(std::size_t value) { return field(static_cast<long long>(value)); }
  CsvWriter& field(int value) { return field(static_cast<long long>(value)); }
  CsvWriter& field(bool value);
  CsvWriter& field(std::string_view value);
  CsvWriter& field(const char* value) { return field(std::string_view(value)); }
  void end_row();

  std::size_t columns() const { return header_.size(); }

 private:
  void separator();

  std::ostream& out_;
  std::vector<std::string> header_;
  std::size_t column_ = 0;
};

}  // namespace mabo
