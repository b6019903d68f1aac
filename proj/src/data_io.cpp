#include "eigenspline/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "eigenspline/error.hpp"

namespace eigenspline {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, const std::string& where) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (field.empty() || res.ec != std::errc() || res.ptr != end) {
    throw FormatError(where + ": cannot parse '" + std::string(field) + "' as a number");
  }
  return v;
}

std::string location(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

}  // namespace

DataSet parse_data_csv(std::istream& in, const std::string& source) {
  DataSet data;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_fields(text);
    if (!header) {
      if (fields.size() != 2 || fields[0] != "x" || fields[1] != "y") {
        throw FormatError(location(source, lineno) + ": expected header \"x,y\", got \"" +
                          std::string(text) + "\"");
      }
      header = true;
      continue;
    }
    if (fields.size() != 2) {
      throw FormatError(location(source, lineno) + ": expected 2 fields, got " +
                        std::to_string(fields.size()));
    }
    const double x = parse_number(fields[0], location(source, lineno));
    const double y = parse_number(fields[1], location(source, lineno));
    if (!(x >= 0.0 && x <= 1.0)) {
      throw FormatError(location(source, lineno) + ": x = " + std::string(fields[0]) +
                        " outside [0, 1]");
    }
    if (!std::isfinite(y)) {
      throw FormatError(location(source, lineno) + ": y is not finite");
    }
    data.x.push_back(x);
    data.y.push_back(y);
  }
  if (!header) throw FormatError(source + ": empty file (expected header \"x,y\")");
  return data;
}

DataSet read_data_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open data file " + path.string());
  return parse_data_csv(f, path.string());
}

std::vector<double> read_points_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open points file " + path.string());
  std::vector<double> xs;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(f, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_fields(text);
    if (!header) {
      if (fields.empty() || fields[0] != "x") {
        throw FormatError(location(path.string(), lineno) +
                          ": expected a header whose first column is \"x\"");
      }
      header = true;
      continue;
    }
    const double x = parse_number(fields[0], location(path.string(), lineno));
    if (!(x >= 0.0 && x <= 1.0)) {
      throw FormatError(location(path.string(), lineno) + ": x outside [0, 1]");
    }
    xs.push_back(x);
  }
  if (!header) throw FormatError(path.string() + ": empty file");
  return xs;
}

std::string predictions_csv(std::span<const double> xs, const Eigen::VectorXd& fhat) {
  std::ostringstream os;
  os.precision(17);
  os << "x,fhat\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    os << xs[i] << ',' << fhat(static_cast<Eigen::Index>(i)) << '\n';
  }
  return os.str();
}

}  // namespace eigenspline
