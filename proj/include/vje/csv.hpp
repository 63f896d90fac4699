#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vje {

// 17 significant digits, enough to round-trip any double.
std::string fmt_double(double x);

// Builds a CSV in memory. The first line is a comment carrying the format version
// and seed, the second the header.
class CsvTable {
 public:
  CsvTable(std::uint64_t seed, std::vector<std::string> columns);

  void add_row(const std::vector<std::string>& cells);
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::size_t ncols_;
  std::string text_;
};

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace vje
