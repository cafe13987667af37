#include "kvbeam/matrix_io.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "kvbeam/errors.h"

namespace kvbeam {

void write_dense(std::ostream& os, const Eigen::MatrixXd& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  std::ostringstream line;
  line << std::scientific << std::setprecision(16);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.str("");
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) line << ' ';
      line << m(i, j);
    }
    os << line.str() << '\n';
  }
}

Eigen::MatrixXd read_dense(std::istream& is) {
  long rows = -1, cols = -1;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) {
    throw IoError("dense matrix: missing or invalid \"rows cols\" header");
  }
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      std::string token;
      if (!(is >> token)) {
        throw IoError("dense matrix: truncated data at entry (" +
                      std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || !std::isfinite(v)) {
        throw IoError("dense matrix: bad entry '" + token + "' at (" +
                      std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      m(i, j) = v;
    }
  }
  std::string extra;
  if (is >> extra) {
    throw IoError("dense matrix: trailing data after " + std::to_string(rows) +
                  "x" + std::to_string(cols) + " entries");
  }
  return m;
}

void save_dense(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_dense(os, m);
  if (!os) throw IoError("write failed: " + path.string());
}

Eigen::MatrixXd load_dense(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return read_dense(is);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace kvbeam
