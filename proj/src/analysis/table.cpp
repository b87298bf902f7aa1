#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "loopsim/errors.hpp"
#include "loopsim/table.hpp"

namespace loopsim {

using nlohmann::json;
using nlohmann::ordered_json;

void ResultTable::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw InvalidArgument("row has " + std::to_string(row.size()) + " cells, table has " +
                              std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

std::string format_cell(const Cell& c) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    return std::get<std::string>(c);
}

namespace {

// Unquoted CSV text -> typed cell.
Cell parse_cell(const std::string& s) {
    if (s.empty()) return s;
    std::int64_t i = 0;
    auto ri = std::from_chars(s.data(), s.data() + s.size(), i);
    if (ri.ec == std::errc() && ri.ptr == s.data() + s.size()) return i;
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    double d = 0.0;
    auto rd = std::from_chars(s.data(), s.data() + s.size(), d);
    if (rd.ec == std::errc() && rd.ptr == s.data() + s.size()) return d;
    return s;
}

bool needs_quotes(const std::string& s) {
    if (s.empty() || s.find_first_of(",\"\n\r") != std::string::npos) return true;
    return !std::holds_alternative<std::string>(parse_cell(s));
}

std::string csv_field(const Cell& c) {
    if (!std::holds_alternative<std::string>(c)) return format_cell(c);
    const auto& s = std::get<std::string>(c);
    if (!needs_quotes(s)) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

// One CSV record; quoted fields kept as strings.
bool read_record(std::istream& in, std::vector<Cell>& out) {
    out.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    std::string field;
    bool quoted = false, in_quotes = false;
    auto flush = [&] {
        out.push_back(quoted ? Cell{field} : parse_cell(field));
        field.clear();
        quoted = false;
    };
    for (int ch; (ch = in.get()) != std::char_traits<char>::eof();) {
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field += static_cast<char>(ch);
            }
        } else if (ch == '"') {
            if (!field.empty()) throw IOError("CSV quote inside an unquoted field");
            in_quotes = quoted = true;
        } else if (ch == ',') {
            flush();
        } else if (ch == '\n') {
            flush();
            return true;
        } else if (ch != '\r') {
            field += static_cast<char>(ch);
        }
    }
    if (in_quotes) throw IOError("CSV ends inside a quoted field");
    flush();
    return true;
}

ordered_json cell_json(const Cell& c) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
    if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? ordered_json(*d) : ordered_json(format_double(*d));
    return std::get<std::string>(c);
}

Cell json_cell(const json& v) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return v.get<std::string>();
    throw IOError("table cell must be a number or a string");
}

void dump(std::ostream& out, const ordered_json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent + 2), ' '), close(static_cast<std::size_t>(indent), ' ');
    if (j.is_object()) {
        if (j.empty()) {
            out << "{}";
            return;
        }
        out << "{\n";
        bool first = true;
        for (const auto& [k, v] : j.items()) {
            if (!first) out << ",\n";
            first = false;
            out << pad << json(k).dump() << ": ";
            dump(out, v, indent + 2);
        }
        out << '\n' << close << '}';
    } else if (j.is_array()) {
        // Arrays of scalars stay on one line.
        bool flat = true;
        for (const auto& v : j) flat = flat && !v.is_structured();
        if (j.empty() || flat) {
            out << '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out << ", ";
                dump(out, j[i], indent);
            }
            out << ']';
            return;
        }
        out << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out << ",\n";
            out << pad;
            dump(out, j[i], indent + 2);
        }
        out << '\n' << close << ']';
    } else if (j.is_number_float()) {
        out << format_double(j.get<double>());
    } else {
        out << j.dump();
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IOError("cannot open '" + path.string() + "' for writing");
    return f;
}

void finish(std::ofstream& f, const std::filesystem::path& path) {
    f.flush();
    if (!f) throw IOError("write to '" + path.string() + "' failed");
}

}  // namespace

void write_csv(std::ostream& out, const ResultTable& t) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << csv_field(Cell{t.columns[c]});
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_field(row[c]);
        out << '\n';
    }
}

ResultTable read_csv(std::istream& in) {
    std::vector<Cell> rec;
    if (!read_record(in, rec)) throw IOError("CSV has no header");
    ResultTable t;
    for (const auto& c : rec) t.columns.push_back(format_cell(c));
    while (read_record(in, rec)) {
        if (rec.size() != t.columns.size()) throw IOError("CSV row width differs from header");
        t.rows.push_back(rec);
    }
    return t;
}

ordered_json to_json(const ResultTable& t) {
    ordered_json j;
    j["columns"] = t.columns;
    j["rows"] = ordered_json::array();
    for (const auto& row : t.rows) {
        ordered_json r = ordered_json::object();
        for (std::size_t c = 0; c < row.size(); ++c) r[t.columns[c]] = cell_json(row[c]);
        j["rows"].push_back(std::move(r));
    }
    return j;
}

ResultTable table_from_json(const json& j) {
    try {
        ResultTable t(j.at("columns").get<std::vector<std::string>>());
        for (const auto& r : j.at("rows")) {
            std::vector<Cell> row;
            for (const auto& c : t.columns) row.push_back(json_cell(r.at(c)));
            t.rows.push_back(std::move(row));
        }
        return t;
    } catch (const json::exception& e) {
        throw IOError(std::string("malformed table JSON: ") + e.what());
    }
}

ordered_json to_json(const ResultRecord& r) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : r) j[k] = cell_json(v);
    return j;
}

std::string dump_json(const ordered_json& j) {
    std::ostringstream out;
    dump(out, j, 0);
    out << '\n';
    return out.str();
}

void export_results(const ResultTable& t, const std::filesystem::path& path, ExportFormat format) {
    auto f = open_out(path);
    if (format == ExportFormat::Csv)
        write_csv(f, t);
    else
        f << dump_json(to_json(t));
    finish(f, path);
}

void export_record(const ResultRecord& r, const std::filesystem::path& path) { write_text(path, dump_json(to_json(r))); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto f = open_out(path);
    f << text;
    finish(f, path);
}

}  // namespace loopsim
