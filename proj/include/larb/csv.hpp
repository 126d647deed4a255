#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace larb {

/// Shortest decimal string that round-trips the binary64 value.
std::string format_double(double v);

double parse_double(const std::string& s);

/// Line-oriented CSV writer. The first line is a comment header carrying the
/// run seed (and any extra provenance), the second the column names.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& comment,
              const std::vector<std::string>& columns);

    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::ofstream out_;
    std::size_t width_;
};

} // namespace larb
