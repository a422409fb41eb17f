#include "gaussfold/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gaussfold::csv {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& raw, double& out) {
    const std::string s = trim(raw);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace

Table parse_matrix(const std::string& text) {
    Table table;
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line)[0] == '#') continue;
        const auto fields = split_fields(line);
        std::vector<double> row(fields.size());
        std::size_t parsed = 0;
        for (std::size_t j = 0; j < fields.size(); ++j)
            if (parse_number(fields[j], row[j])) ++parsed;
        if (parsed < fields.size()) {
            // a header row has no numeric fields at all
            if (parsed == 0 && rows.empty() && table.header.empty()) {
                for (const auto& f : fields) table.header.push_back(trim(f));
                continue;
            }
            throw InvalidArgument("csv line " + std::to_string(line_no) + ": non-numeric field");
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw InvalidArgument("csv line " + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (!table.header.empty() && !rows.empty() && table.header.size() != rows.front().size())
        throw InvalidArgument("csv header width does not match data width");
    const auto nrow = static_cast<Eigen::Index>(rows.size());
    const auto ncol = rows.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    table.values.resize(nrow, ncol);
    for (Eigen::Index i = 0; i < nrow; ++i)
        for (Eigen::Index j = 0; j < ncol; ++j)
            table.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return table;
}

Table read_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open csv file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_matrix(ss.str());
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_matrix(const Mat& values, const std::vector<std::string>& header,
                          const std::vector<std::string>& comments) {
    std::ostringstream out;
    for (const auto& c : comments) out << "# " << c << '\n';
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << quote(header[j]);
        out << '\n';
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
        out << '\n';
    }
    return out.str();
}

void write_matrix(const std::string& path, const Mat& values, const std::vector<std::string>& header,
                  const std::vector<std::string>& comments) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write csv file: " + path);
    out << format_matrix(values, header, comments);
}

}  // namespace gaussfold::csv
