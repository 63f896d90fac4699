#include "vje/csv.hpp"

#include <cstdio>
#include <fstream>

#include "vje/config.hpp"
#include "vje/error.hpp"

namespace vje {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvTable::CsvTable(std::uint64_t seed, std::vector<std::string> columns) : ncols_(columns.size()) {
  text_ = "# format_version=" + std::to_string(kFormatVersion) + " seed=" + std::to_string(seed) + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) text_ += (i ? "," : "") + columns[i];
  text_ += "\n";
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != ncols_) {
    throw ShapeError("CsvTable: row has " + std::to_string(cells.size()) + " cells, header has " +
                     std::to_string(ncols_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
  text_ += "\n";
}

std::string CsvTable::str() const { return text_; }

void CsvTable::write(const std::filesystem::path& path) const { write_text_file(path, text_); }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace vje
