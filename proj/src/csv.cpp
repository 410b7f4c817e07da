#include "qvoter/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace qvoter {

std::string format_real(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::general, 17);
  if (ec != std::errc{}) throw std::runtime_error("format_real: to_chars failed");
  return std::string(buf.data(), ptr);
}

CsvWriter& CsvWriter::header(std::initializer_list<std::string_view> names) {
  for (auto name : names) field(name);
  end_row();
  return *this;
}

CsvWriter& CsvWriter::field(std::string_view text) {
  if (!first_) *out_ << ',';
  if (text.find_first_of(",\"\n") == std::string_view::npos) {
    *out_ << text;
  } else {
    *out_ << '"';
    for (char c : text) {
      if (c == '"') *out_ << '"';
      *out_ << c;
    }
    *out_ << '"';
  }
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::field(double value) { return field(format_real(value)); }

CsvWriter& CsvWriter::field(std::int64_t value) {
  return field(std::string_view(std::to_string(value)));
}

CsvWriter& CsvWriter::field(std::uint64_t value) {
  return field(std::string_view(std::to_string(value)));
}

void CsvWriter::end_row() {
  *out_ << '\n';
  first_ = true;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c != '"') {
        out.back() += c;
      } else if (i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quote in CSV line");
  return out;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace qvoter
