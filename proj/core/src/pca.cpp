#include "probelens/pca.hpp"

#include <algorithm>
#include <string>

#include <Eigen/SVD>

#include "probelens/error.hpp"

namespace probelens {

PcaModel pca_fit(const Eigen::MatrixXd& X, std::size_t k) {
  const auto m = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<std::size_t>(X.cols());
  if (m < 2) throw RangeError("PCA needs at least 2 points, got " + std::to_string(m));
  if (k < 1 || k > std::min(m - 1, d)) {
    throw RangeError("k=" + std::to_string(k) + " outside [1, " + std::to_string(std::min(m - 1, d)) + "]");
  }
  PcaModel model;
  model.mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - model.mean;
  const double denom = static_cast<double>(m - 1);
  model.total_variance = centered.squaredNorm() / denom;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto kk = static_cast<Eigen::Index>(k);
  model.components = svd.matrixV().leftCols(kk).transpose();
  model.explained_variance = svd.singularValues().head(kk).array().square() / denom;

  for (Eigen::Index r = 0; r < kk; ++r) {
    Eigen::Index arg = 0;
    model.components.row(r).cwiseAbs().maxCoeff(&arg);
    if (model.components(r, arg) < 0.0) model.components.row(r) *= -1.0;
  }
  return model;
}

Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.mean.size()) {
    throw DimensionError("PCA fitted on " + std::to_string(model.mean.size()) + " features, got " +
                         std::to_string(X.cols()));
  }
  return (X.rowwise() - model.mean) * model.components.transpose();
}

double adjacent_distance(const Eigen::MatrixXd& points) {
  if (points.rows() < 2) throw RangeError("adjacent_distance needs at least 2 points");
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < points.rows(); ++i) total += (points.row(i + 1) - points.row(i)).norm();
  return total / static_cast<double>(points.rows() - 1);
}

}  // namespace probelens
