#pragma once

#include <string>

#include "ssmred/model.hpp"
#include "ssmred/types.hpp"

namespace ssmred {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Matrix Market exchange format, coordinate (sparse) or array (dense),
/// real general/symmetric.
Mat read_matrix_market(const std::string& path);
void write_matrix_market(const Mat& A, const std::string& path, bool sparse = true,
                         double drop_tol = 0.0);

Mat read_dense_csv(const std::string& path);
void write_dense_csv(const Mat& A, const std::string& path);

/// Trajectory CSV: header row, column 0 = time [s], columns 1..2n = state.
/// Decimated files carry a sidecar `<path>.meta` with stride and dense
/// channel indices.
void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          const std::vector<int>& dense_channels = {});
Trajectory read_trajectory_csv(const std::string& path);

/// Deterministic float formatting used by every CSV writer (round-trip exact).
std::string format_double(double v);

}  // namespace ssmred
