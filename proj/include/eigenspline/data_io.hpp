#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "eigenspline/kernel.hpp"

namespace eigenspline {

/// Parses "x,y" CSV (header required, blank lines skipped). Malformed rows
/// raise FormatError naming the 1-based line.
DataSet parse_data_csv(std::istream& in, const std::string& source = "<stream>");
/// Throws IoError if the file cannot be opened.
DataSet read_data_csv(const std::filesystem::path& path);

/// Single-column point list: header "x" (extra columns ignored).
std::vector<double> read_points_csv(const std::filesystem::path& path);

/// "x,fhat" CSV with round-trip precision.
std::string predictions_csv(std::span<const double> xs, const Eigen::VectorXd& fhat);

}  // namespace eigenspline
