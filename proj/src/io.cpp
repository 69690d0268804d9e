#include "crest/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace crest::io {

namespace {

double parse_double(const std::string& cell) {
    char* end = nullptr;
    const double value = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str())
        throw ConfigError("malformed numeric cell: '" + cell + "'");
    return value;
}

int parse_int(const std::string& cell) {
    char* end = nullptr;
    const long value = std::strtol(cell.c_str(), &end, 10);
    if (end == cell.c_str())
        throw ConfigError("malformed integer cell: '" + cell + "'");
    return static_cast<int>(value);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string::size_type start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string join_active(const std::vector<int>& active) {
    std::string out;
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(active[i]);
    }
    return out;
}

std::vector<int> parse_active(const std::string& cell) {
    std::vector<int> out;
    if (cell.empty()) return out;
    for (const std::string& part : split(cell, ';')) out.push_back(parse_int(part));
    return out;
}

// Column-block helpers shared by the step log writer and reader.
void push_vector_header(std::vector<std::string>& header, const std::string& name,
                        int size) {
    for (int i = 0; i < size; ++i)
        header.push_back(name + "_" + std::to_string(i));
}

void push_matrix_header(std::vector<std::string>& header, const std::string& name,
                        int rows, int cols) {
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            header.push_back(name + "_" + std::to_string(i) + "_" +
                             std::to_string(j));
}

void push_vector(std::vector<std::string>& row, const VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) row.push_back(fmt_double(v(i)));
}

void push_matrix(std::vector<std::string>& row, const MatrixXd& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) row.push_back(fmt_double(m(i, j)));
}

VectorXd take_vector(const std::vector<std::string>& row, std::size_t& at,
                     int size) {
    VectorXd v(size);
    for (int i = 0; i < size; ++i) v(i) = parse_double(row.at(at++));
    return v;
}

MatrixXd take_matrix(const std::vector<std::string>& row, std::size_t& at,
                     int rows, int cols) {
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = parse_double(row.at(at++));
    return m;
}

// Counts columns named prefix_0, prefix_1, ... in the header.
int count_prefixed(const std::vector<std::string>& header,
                   const std::string& prefix) {
    int count = 0;
    while (true) {
        const std::string want = prefix + "_" + std::to_string(count);
        bool found = false;
        for (const std::string& h : header)
            if (h == want) {
                found = true;
                break;
            }
        if (!found) break;
        ++count;
    }
    return count;
}

}  // namespace

std::string fmt_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

int Csv::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    Csv csv;
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("empty file: " + path);
    csv.header = split(line, ',');
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != csv.header.size())
            throw ConfigError("ragged row in " + path);
        csv.rows.push_back(std::move(cells));
    }
    return csv;
}

void write_csv(const std::string& path, const Csv& csv) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    for (std::size_t i = 0; i < csv.header.size(); ++i) {
        if (i) out << ',';
        out << csv.header[i];
    }
    out << '\n';
    for (const auto& row : csv.rows) {
        if (row.size() != csv.header.size())
            throw ArgumentError("row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    if (!out) throw ConfigError("write failed: " + path);
}

void write_trajectory(const std::string& path, const scenario::Trajectory& traj) {
    if (traj.steps() == 0) throw ArgumentError("trajectory is empty");
    const int n = static_cast<int>(traj.x[0].size());
    const int m = static_cast<int>(traj.u[0].size());
    const int p = static_cast<int>(traj.d[0].size());
    const int l = static_cast<int>(traj.y[0].size());

    Csv csv;
    csv.header.push_back("k");
    push_vector_header(csv.header, "x", n);
    push_vector_header(csv.header, "u", m);
    push_vector_header(csv.header, "d", p);
    push_vector_header(csv.header, "y", l);
    push_vector_header(csv.header, "w", n);
    push_vector_header(csv.header, "v", l);

    for (int k = 0; k < traj.steps(); ++k) {
        std::vector<std::string> row;
        row.push_back(std::to_string(k));
        push_vector(row, traj.x[k]);
        push_vector(row, traj.u[k]);
        push_vector(row, traj.d[k]);
        push_vector(row, traj.y[k]);
        push_vector(row, traj.w[k]);
        push_vector(row, traj.v[k]);
        csv.rows.push_back(std::move(row));
    }
    write_csv(path, csv);
}

scenario::Trajectory read_trajectory(const std::string& path) {
    const Csv csv = read_csv(path);
    const int n = count_prefixed(csv.header, "x");
    const int m = count_prefixed(csv.header, "u");
    const int p = count_prefixed(csv.header, "d");
    const int l = count_prefixed(csv.header, "y");
    if (n == 0 || m == 0 || p == 0 || l == 0)
        throw ConfigError("trajectory file lacks required columns: " + path);
    const std::size_t expect = 1 + 2 * static_cast<std::size_t>(n) +
                               static_cast<std::size_t>(m) +
                               static_cast<std::size_t>(p) +
                               2 * static_cast<std::size_t>(l);
    if (csv.header.size() != expect)
        throw ConfigError("trajectory file has unexpected columns: " + path);

    scenario::Trajectory traj;
    for (const auto& row : csv.rows) {
        std::size_t at = 1;  // skip k
        traj.x.push_back(take_vector(row, at, n));
        traj.u.push_back(take_vector(row, at, m));
        traj.d.push_back(take_vector(row, at, p));
        traj.y.push_back(take_vector(row, at, l));
        traj.w.push_back(take_vector(row, at, n));
        traj.v.push_back(take_vector(row, at, l));
    }
    if (traj.steps() == 0) throw ConfigError("trajectory file has no rows: " + path);
    return traj;
}

void write_steps(const std::string& path, const std::vector<StepOutput>& steps) {
    if (steps.empty()) throw ArgumentError("step log is empty");
    const int n = static_cast<int>(steps[0].x_pred.size());
    const int p = static_cast<int>(steps[0].d_hat_u.size());
    const int l = static_cast<int>(steps[0].R_tilde.rows());

    Csv csv;
    csv.header.push_back("k");
    push_vector_header(csv.header, "x_pred", n);
    push_matrix_header(csv.header, "P_pred", n, n);
    push_matrix_header(csv.header, "R_tilde", l, l);
    push_matrix_header(csv.header, "M", p, l);
    push_vector_header(csv.header, "d_hat_u", p);
    push_matrix_header(csv.header, "P_du", p, p);
    push_vector_header(csv.header, "d_hat", p);
    push_matrix_header(csv.header, "P_d", p, p);
    push_matrix_header(csv.header, "P_xd", n, p);
    push_vector_header(csv.header, "x_star", n);
    push_matrix_header(csv.header, "P_star", n, n);
    push_matrix_header(csv.header, "R_star", l, l);
    push_matrix_header(csv.header, "L", n, l);
    push_vector_header(csv.header, "x_hat_u", n);
    push_matrix_header(csv.header, "P_xu", n, n);
    push_vector_header(csv.header, "x_hat", n);
    push_matrix_header(csv.header, "P_x", n, n);
    csv.header.push_back("active_d");
    csv.header.push_back("active_x");

    int k = 1;
    for (const StepOutput& s : steps) {
        std::vector<std::string> row;
        row.push_back(std::to_string(k++));
        push_vector(row, s.x_pred);
        push_matrix(row, s.P_pred);
        push_matrix(row, s.R_tilde);
        push_matrix(row, s.M);
        push_vector(row, s.d_hat_u);
        push_matrix(row, s.P_du);
        push_vector(row, s.d_hat);
        push_matrix(row, s.P_d);
        push_matrix(row, s.P_xd);
        push_vector(row, s.x_star);
        push_matrix(row, s.P_star);
        push_matrix(row, s.R_star);
        push_matrix(row, s.L);
        push_vector(row, s.x_hat_u);
        push_matrix(row, s.P_xu);
        push_vector(row, s.x_hat);
        push_matrix(row, s.P_x);
        row.push_back(join_active(s.active_d));
        row.push_back(join_active(s.active_x));
        csv.rows.push_back(std::move(row));
    }
    write_csv(path, csv);
}

std::vector<StepOutput> read_steps(const std::string& path) {
    const Csv csv = read_csv(path);
    const int n = count_prefixed(csv.header, "x_pred");
    const int p = count_prefixed(csv.header, "d_hat_u");
    const int l = count_prefixed(csv.header, "R_tilde_0");
    if (n == 0 || p == 0 || l == 0)
        throw ConfigError("step log lacks required columns: " + path);

    std::vector<StepOutput> steps;
    for (const auto& row : csv.rows) {
        StepOutput s;
        std::size_t at = 1;  // skip k
        s.x_pred = take_vector(row, at, n);
        s.P_pred = take_matrix(row, at, n, n);
        s.R_tilde = take_matrix(row, at, l, l);
        s.M = take_matrix(row, at, p, l);
        s.d_hat_u = take_vector(row, at, p);
        s.P_du = take_matrix(row, at, p, p);
        s.d_hat = take_vector(row, at, p);
        s.P_d = take_matrix(row, at, p, p);
        s.P_xd = take_matrix(row, at, n, p);
        s.x_star = take_vector(row, at, n);
        s.P_star = take_matrix(row, at, n, n);
        s.R_star = take_matrix(row, at, l, l);
        s.L = take_matrix(row, at, n, l);
        s.x_hat_u = take_vector(row, at, n);
        s.P_xu = take_matrix(row, at, n, n);
        s.x_hat = take_vector(row, at, n);
        s.P_x = take_matrix(row, at, n, n);
        s.active_d = parse_active(row.at(at++));
        s.active_x = parse_active(row.at(at++));
        steps.push_back(std::move(s));
    }
    if (steps.empty()) throw ConfigError("step log has no rows: " + path);
    return steps;
}

void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows) {
    Csv csv;
    csv.header = {"k",          "err_x",      "err_x_u",   "err_d",
                  "err_d_u",    "trace_P_x",  "trace_P_xu", "trace_P_d",
                  "trace_P_du", "chi2_stat",  "attacked",  "active_d",
                  "active_x"};
    for (const MetricsRow& r : rows) {
        csv.rows.push_back({std::to_string(r.k), fmt_double(r.err_x),
                            fmt_double(r.err_x_u), fmt_double(r.err_d),
                            fmt_double(r.err_d_u), fmt_double(r.trace_P_x),
                            fmt_double(r.trace_P_xu), fmt_double(r.trace_P_d),
                            fmt_double(r.trace_P_du), fmt_double(r.chi2_stat),
                            r.attacked ? "1" : "0", std::to_string(r.active_d),
                            std::to_string(r.active_x)});
    }
    write_csv(path, csv);
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
    const Csv csv = read_csv(path);
    std::vector<MetricsRow> rows;
    for (const auto& row : csv.rows) {
        if (row.size() != 13) throw ConfigError("metrics file is malformed: " + path);
        MetricsRow r;
        std::size_t at = 0;
        r.k = parse_int(row[at++]);
        r.err_x = parse_double(row[at++]);
        r.err_x_u = parse_double(row[at++]);
        r.err_d = parse_double(row[at++]);
        r.err_d_u = parse_double(row[at++]);
        r.trace_P_x = parse_double(row[at++]);
        r.trace_P_xu = parse_double(row[at++]);
        r.trace_P_d = parse_double(row[at++]);
        r.trace_P_du = parse_double(row[at++]);
        r.chi2_stat = parse_double(row[at++]);
        r.attacked = parse_int(row[at++]) != 0;
        r.active_d = parse_int(row[at++]);
        r.active_x = parse_int(row[at++]);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace crest::io
