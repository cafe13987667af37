#pragma once

#include <filesystem>
#include <iosfwd>

#include <Eigen/Core>

namespace kvbeam {

// Dense text format: a "rows cols" header line followed by one line per row,
// entries in 17-significant-digit scientific notation.

void write_dense(std::ostream& os, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_dense(std::istream& is);

void save_dense(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_dense(const std::filesystem::path& path);

}  // namespace kvbeam
