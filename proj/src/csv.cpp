#include "carving/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace carving {

namespace {

bool parse_cell(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
    if (begin == end) return false;
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

std::vector<std::vector<double>> read_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_no = 0;
    bool maybe_header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        long col = 0;
        bool bad = false;
        while (std::getline(ss, cell, ',')) {
            ++col;
            double v;
            if (!parse_cell(cell, v)) {
                bad = true;
                break;
            }
            row.push_back(v);
        }
        if (bad) {
            if (maybe_header && rows.empty()) {
                maybe_header = false;  // tolerate one leading header row
                continue;
            }
            throw ValidationError("csv: non-numeric cell at row " + std::to_string(line_no) +
                                  ", column " + std::to_string(col) + " of " + path);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ValidationError("csv: ragged row " + std::to_string(line_no) + " (" +
                                  std::to_string(row.size()) + " cells, expected " +
                                  std::to_string(rows.front().size()) + ") in " + path);
        }
        rows.push_back(std::move(row));
        maybe_header = false;
    }
    if (rows.empty()) throw ValidationError("csv: no numeric rows in " + path);
    return rows;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path) {
    const auto rows = read_rows(path);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

Vector read_csv_vector(const std::string& path) {
    const Matrix m = read_csv_matrix(path);
    if (m.cols() != 1 && m.rows() != 1) {
        throw ValidationError("csv: expected a one-column (or one-row) vector in " + path);
    }
    if (m.cols() == 1) return m.col(0);
    return m.row(0).transpose();
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv_matrix(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw ValidationError("csv: cannot write " + path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

}  // namespace carving
