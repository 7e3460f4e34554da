#pragma once

#include <Eigen/Core>
#include <string>

#include "nzprop/errors.hpp"

namespace nzprop {

/// Reads one real per line (a single CSV column also qualifies; a trailing
/// comma per line is tolerated). Blank lines are skipped.
Eigen::VectorXd read_vector(const std::string& path);

/// Reads a dense comma-separated matrix, no header, row-major. All rows must
/// have the same number of fields.
Eigen::MatrixXd read_matrix_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix);
void write_vector(const std::string& path, const Eigen::VectorXd& vector);

/// Shortest lossless decimal rendering of a double (round-trips exactly).
std::string format_double(double value);

}  // namespace nzprop
