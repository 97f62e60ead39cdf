#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace featfool::harness {

// Cells are stored already formatted so that emission is a pure function of
// the table.
struct Table {
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    // ShapeError when the row width differs from the header.
    void add_row(std::vector<std::string> row);
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& column) const;

    bool operator==(const Table&) const = default;
};

// Fixed four-decimal rendering used for every numeric cell.
std::string fmt4(double v);

enum class ReportFormat { csv, markdown };

// RFC 4180 style: fields holding a comma, quote or newline are quoted.
std::string to_csv(const Table& table);
// The title is not part of the CSV text.
Table parse_csv(const std::string& text);
std::string to_markdown(const Table& table);

// Writes <stem>.csv or <stem>.md. IoError when the file cannot be written.
std::filesystem::path emit_report(const Table& table, const std::filesystem::path& stem, ReportFormat format);
void emit_all(const Table& table, const std::filesystem::path& stem);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace featfool::harness
