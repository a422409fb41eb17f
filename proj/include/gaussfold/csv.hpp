#pragma once

#include "gaussfold/types.hpp"

#include <string>
#include <vector>

namespace gaussfold::csv {

struct Table {
    std::vector<std::string> header;  // empty when the file had none
    Mat values;
};

/// Reads a numeric, row-major CSV. A first row that does not parse as numbers
/// is taken as the header. Lines starting with '#' and blank lines are skipped.
Table read_matrix(const std::string& path);
Table parse_matrix(const std::string& text);

/// Writes with 17 significant digits so values round-trip exactly. Each entry
/// of `comments` is emitted as a leading "# ..." line.
void write_matrix(const std::string& path, const Mat& values,
                  const std::vector<std::string>& header = {},
                  const std::vector<std::string>& comments = {});
std::string format_matrix(const Mat& values, const std::vector<std::string>& header = {},
                          const std::vector<std::string>& comments = {});

std::string format_double(double v);
/// RFC-4180 quoting when the field contains a comma, quote or newline.
std::string quote(const std::string& field);

}  // namespace gaussfold::csv
