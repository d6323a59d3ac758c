#pragma once

#include <string>
#include <vector>

namespace cxrp {

// Minimal CSV support: comma separator, optional double-quote quoting with
// "" escapes, UTF-8 passthrough, header row expected by all callers.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

std::string csv_escape(const std::string& field);
// Shortest round-trip formatting (std::to_chars), so CSV <-> double is lossless.
std::string format_double(double v);

void write_csv(const std::string& path, const CsvTable& table);

} // namespace cxrp
