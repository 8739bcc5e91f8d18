#include "molqca/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace molqca::csv {

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw std::invalid_argument("row has " + std::to_string(row.size()) + " cells, header has " +
                                    std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

std::string render(const Cell& cell) {
    if (const double* d = std::get_if<double>(&cell)) return format_double(*d);
    if (const std::int64_t* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
    return quote(std::get<std::string>(cell));
}

} // namespace

void write(std::ostream& out, const Table& table) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out << ',';
        out << quote(table.columns[i]);
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << render(row[i]);
        }
        out << '\n';
    }
}

std::string to_string(const Table& table) {
    std::ostringstream out;
    write(out, table);
    return out.str();
}

void write_file(const Table& table, const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write(out, table);
    out.flush();
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::vector<std::vector<std::string>> parse(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool row_open = false;
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
                field += c;
            }
            continue;
        }
        row_open = true;
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            row_open = false;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted) {
        throw std::invalid_argument("unterminated quoted field");
    }
    if (row_open) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

Table trajectory_table(const Trajectory& traj) {
    Table t;
    t.columns = {"t", "delta", "sx", "sy", "sz", "e_expected", "e1", "e2", "p_work", "p_switch"};
    t.rows.reserve(traj.samples.size());
    for (const TrajectorySample& s : traj.samples) {
        t.rows.push_back({s.t, s.delta, s.state.x, s.state.y, s.state.z, s.e_expected, s.e1, s.e2, s.p_work,
                          s.p_switch});
    }
    return t;
}

} // namespace molqca::csv
