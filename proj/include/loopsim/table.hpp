#pragma once

// Result tables and records with bit-stable CSV / JSON output.
//
// Doubles are printed in shortest round-trip form and always carry a '.' or
// exponent, so a re-read cell keeps its type. CSV strings are quoted only when
// they would otherwise be ambiguous (separators, quotes, numeric-looking text).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace loopsim {

using Cell = std::variant<std::int64_t, double, std::string>;

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    ResultTable() = default;
    explicit ResultTable(std::vector<std::string> cols) : columns(std::move(cols)) {}

    // InvalidArgument when the row width differs from the column count.
    void add_row(std::vector<Cell> row);
    bool operator==(const ResultTable&) const = default;
};

// Ordered key/value record, e.g. a metrics summary.
using ResultRecord = std::vector<std::pair<std::string, Cell>>;

enum class ExportFormat { Csv, Json };

std::string format_double(double v);
std::string format_cell(const Cell& c);

void write_csv(std::ostream& out, const ResultTable& t);
ResultTable read_csv(std::istream& in);  // IOError on malformed input

// {"columns": [...], "rows": [{col: value, ...}, ...]} in column order.
nlohmann::ordered_json to_json(const ResultTable& t);
ResultTable table_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ResultRecord& r);

// JSON text with a trailing newline; doubles use format_double.
std::string dump_json(const nlohmann::ordered_json& j);

// IOError when the file cannot be written.
void export_results(const ResultTable& t, const std::filesystem::path& path, ExportFormat format);
void export_record(const ResultRecord& r, const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace loopsim
