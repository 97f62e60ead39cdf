#include "featfool/harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "featfool/errors.hpp"

namespace featfool::harness {

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) {
        throw ShapeError("row of " + std::to_string(row.size()) + " cells in a table of " +
                         std::to_string(columns.size()) + " columns");
    }
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw DomainError("table '" + title + "' has no column '" + name + "'");
}

double Table::number(std::size_t row, const std::string& name) const {
    const std::string& cell = rows.at(row).at(column(name));
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used == cell.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("cell '" + cell + "' in column '" + name + "' is not a number");
}

std::string fmt4(double v) {
    if (std::isnan(v)) return "nan";
    if (v == 0.0) v = 0.0;  // drops the sign of -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    std::string s = buf;
    if (s == "-0.0000") s = "0.0000";
    return s;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void csv_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_field(cells[i]);
    }
    out += '\n';
}

std::vector<std::vector<std::string>> csv_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, any = false;
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            rec.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n') {
            rec.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(rec));
            rec.clear();
            any = false;
            ++line;
        } else if (c != '\r') {
            field += c;
            any = true;
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV field on line " + std::to_string(line));
    if (any || !field.empty()) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

std::string to_csv(const Table& table) {
    std::string out;
    csv_line(out, table.columns);
    for (const auto& r : table.rows) csv_line(out, r);
    return out;
}

Table parse_csv(const std::string& text) {
    auto records = csv_records(text);
    if (records.empty()) throw ParseError("CSV text has no header line");
    Table t;
    t.columns = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() != t.columns.size()) {
            throw ParseError("CSV line " + std::to_string(i + 1) + " has " + std::to_string(records[i].size()) +
                             " fields, header has " + std::to_string(t.columns.size()));
        }
        t.rows.push_back(std::move(records[i]));
    }
    return t;
}

std::string to_markdown(const Table& table) {
    auto cell = [](const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '|') out += '\\';
            out += c == '\n' ? ' ' : c;
        }
        return out;
    };
    std::ostringstream os;
    if (!table.title.empty()) os << "### " << table.title << "\n\n";
    os << '|';
    for (const auto& c : table.columns) os << ' ' << cell(c) << " |";
    os << "\n|";
    for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i == 0 ? " --- |" : " ---: |");
    os << '\n';
    for (const auto& r : table.rows) {
        os << '|';
        for (const auto& c : r) os << ' ' << cell(c) << " |";
        os << '\n';
    }
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path emit_report(const Table& table, const std::filesystem::path& stem, ReportFormat format) {
    std::filesystem::path path = stem;
    path += format == ReportFormat::csv ? ".csv" : ".md";
    write_text(path, format == ReportFormat::csv ? to_csv(table) : to_markdown(table));
    return path;
}

void emit_all(const Table& table, const std::filesystem::path& stem) {
    emit_report(table, stem, ReportFormat::csv);
    emit_report(table, stem, ReportFormat::markdown);
}

}  // namespace featfool::harness
