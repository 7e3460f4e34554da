#include "nzprop/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace nzprop {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view field, const std::string& path,
                    size_t line_no) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    std::ostringstream msg;
    msg << path << ":" << line_no << ": cannot parse '" << std::string(field)
        << "' as a number";
    throw IoError(msg.str());
  }
  return value;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  return in;
}

}  // namespace

Eigen::VectorXd read_vector(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<double> values;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (!sv.empty() && sv.back() == ',') sv.remove_suffix(1);
    sv = trim(sv);
    if (sv.empty()) continue;
    values.push_back(parse_double(sv, path, line_no));
  }
  if (values.empty()) throw IoError(path + ": no values found");
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (size_t i = 0; i < values.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = values[i];
  }
  return out;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view sv = line;
    size_t start = 0;
    while (true) {
      const size_t comma = sv.find(',', start);
      const std::string_view field =
          sv.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                           : comma - start);
      row.push_back(parse_double(field, path, line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": row has " << row.size()
          << " fields, expected " << rows.front().size();
      throw IoError(msg.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no rows found");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  return out;
}

std::string format_double(double value) {
  char buf[32];
  // %.17g round-trips any double; prefer the shortest representation that
  // still parses back to the same bits.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, value);
    double back = 0.0;
    std::from_chars(buf, buf + std::string_view(buf).size(), back);
    if (back == value || (back != back && value != value)) break;
  }
  return buf;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(matrix(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_vector(const std::string& path, const Eigen::VectorXd& vector) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  for (Eigen::Index i = 0; i < vector.size(); ++i) {
    out << format_double(vector(i)) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace nzprop
