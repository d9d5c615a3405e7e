#pragma once

#include <cstddef>

#include <Eigen/Core>

namespace probelens {

struct PcaModel {
  Eigen::RowVectorXd mean;              // d
  Eigen::MatrixXd components;           // k x d, orthonormal rows
  Eigen::VectorXd explained_variance;   // k, non-increasing, divisor m-1
  double total_variance = 0.0;          // trace of the sample covariance
};

/// Top-k right singular vectors of the centred data. Each component is
/// signed so its largest-magnitude entry is positive. Requires m >= 2 and
/// 1 <= k <= min(m-1, d); throws RangeError otherwise.
PcaModel pca_fit(const Eigen::MatrixXd& X, std::size_t k);

/// (X - mean) * components^T, an m x k matrix.
Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& X);

/// Mean Euclidean distance between consecutive rows (divisor m-1).
double adjacent_distance(const Eigen::MatrixXd& points);

}  // namespace probelens
