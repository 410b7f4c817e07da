#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qvoter {

/// 17 significant digits, general notation.
std::string format_real(double value);

/// Minimal CSV writer. Fields containing commas, quotes or newlines are
/// quoted with doubled inner quotes.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(&out) {}

  CsvWriter& header(std::initializer_list<std::string_view> names);
  CsvWriter& field(std::string_view text);
  CsvWriter& field(double value);
  CsvWriter& field(std::int64_t value);
  CsvWriter& field(std::uint64_t value);
  CsvWriter& field(int value) { return field(static_cast<std::int64_t>(value)); }
  void end_row();

 private:
  std::ostream* out_;
  bool first_ = true;
};

/// Splits one CSV line on commas, honoring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);

/// 64-bit FNV-1a of a file's bytes.
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace qvoter
