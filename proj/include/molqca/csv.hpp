#pragma once

// Minimal CSV tables: header plus rows of numeric or text cells.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "molqca/dynamics.hpp"

namespace molqca::csv {

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    /// Throws std::invalid_argument if the row width differs from the header.
    void add_row(std::vector<Cell> row);
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 17 significant digits, so the text parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// RFC 4180 quoting: fields containing a comma, quote, CR or LF are quoted.
std::string quote(std::string_view field);

void write(std::ostream& out, const Table& table);
std::string to_string(const Table& table);

/// Writes to path, creating parent directories. Throws IoError naming the path.
void write_file(const Table& table, const std::filesystem::path& path);

/// Parses text produced by write(). Every cell comes back as a string.
std::vector<std::vector<std::string>> parse(std::string_view text);

/// Columns t, delta, sx, sy, sz, e_expected, e1, e2, p_work, p_switch.
Table trajectory_table(const Trajectory& traj);

} // namespace molqca::csv
