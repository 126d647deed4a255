#include "larb/csv.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace larb {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc())
        throw std::runtime_error("parse_double: bad number '" + s + "'");
    return v;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& comment,
                     const std::vector<std::string>& columns)
    : width_(columns.size()) {
    out_.open(path, std::ios::trunc);
    if (!out_)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out_ << "# " << comment << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
    out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_)
        throw std::logic_error("CsvWriter: wrong cell count");
    for (std::size_t i = 0; i < cells.size(); ++i)
        out_ << cells[i] << (i + 1 < cells.size() ? "," : "");
    out_ << "\n";
}

void CsvWriter::close() {
    out_.flush();
    if (!out_) throw std::runtime_error("CsvWriter: write failure");
    out_.close();
}

} // namespace larb
