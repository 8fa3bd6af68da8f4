#include "mabo/csv.hpp"

#include <charconv>
#include <cmath>

#include "mabo/error.hpp"

namespace mabo {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";  // drops the sign of -0.0
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header)
    : out_(out), header_(std::move(header)) {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << header_[i];
  }
  out_ << '\n';
}

void CsvWriter::separator() {
  if (column_ >= header_.size()) throw InternalError("csv row has more fields than header");
  if (column_ > 0) out_ << ',';
  ++column_;
}

CsvWriter& CsvWriter::field(double value) {
  separator();
  out_ << format_double(value);
  return *this;
}

CsvWriter& CsvWriter::field(long long value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::field(bool value) {
  separator();
  out_ << (value ? 1 : 0);
  return *this;
}

CsvWriter& CsvWriter::field(std::string_view value) {
  separator();
  out_ << value;
  return *this;
}

void CsvWriter::end_row() {
  if (column_ != header_.size()) throw InternalError("csv row has fewer fields than header");
  out_ << '\n';
  column_ = 0;
}

}  // namespace mabo
