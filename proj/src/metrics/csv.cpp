#include "ifl/metrics/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ifl/errors.hpp"

namespace ifl::metrics {
namespace {

std::string join(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += fields[i];
    }
    return line;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), n_cols_(header.size()), path_(path) {
    if (!out_) throw DataError("cannot open for writing: " + path.string());
    if (header.empty()) throw std::invalid_argument("CsvWriter: empty header");
    out_ << join(header) << '\n';
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
    if (fields.size() != n_cols_)
        throw std::invalid_argument("CsvWriter: row width " + std::to_string(fields.size()) +
                                    " != header width " + std::to_string(n_cols_));
    out_ << join(fields) << '\n';
    if (!out_) throw DataError("write failed: " + path_.string());
}

std::size_t CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw std::invalid_argument("no such CSV column: " + name);
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV: " + path.string());
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() != t.header.size())
            throw DataError("ragged CSV row in " + path.string());
        t.rows.push_back(std::move(fields));
    }
    return t;
}

}  // namespace ifl::metrics
