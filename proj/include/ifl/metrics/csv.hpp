#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace ifl::metrics {

// Fixed six-decimal formatting so output files are stable across platforms.
std::string format_double(double v);

// Minimal CSV: comma-separated, newline rows, no quoting (fields here are
// numbers and short identifiers).
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    void write_row(const std::vector<std::string>& fields);

  private:
    std::ofstream out_;
    std::size_t n_cols_;
    std::filesystem::path path_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const;  // throws if absent
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace ifl::metrics
