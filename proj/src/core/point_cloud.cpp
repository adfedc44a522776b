#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ahs/core.hpp"

namespace ahs {

PointCloud::PointCloud(std::vector<Vec3> points)
    : points_(std::move(points)), index_(points_) {}

PointCloud::PointCloud(const PointCloud& other)
    : points_(other.points_), index_(points_) {}

PointCloud& PointCloud::operator=(const PointCloud& other) {
  if (this != &other) {
    points_ = other.points_;
    index_ = KdTree(points_);
  }
  return *this;
}

PointCloud PointCloud::build(std::vector<Vec3> points) {
  if (points.empty()) {
    throw Error(ErrorKind::InvalidInput, "point cloud is empty");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!all_finite(points[i])) {
      throw Error(ErrorKind::InvalidInput,
                  "non-finite coordinate at point " + std::to_string(i));
    }
    if (points[i].cwiseAbs().maxCoeff() > 1.5) {
      throw Error(ErrorKind::InvalidInput,
                  "point " + std::to_string(i) + " lies outside [-1.5, 1.5]^3");
    }
  }
  return PointCloud(std::move(points));
}

NeighborList PointCloud::knn(const Vec3& q, std::size_t k) const {
  NeighborList out;
  knn(q, k, out);
  return out;
}

void PointCloud::knn(const Vec3& q, std::size_t k, NeighborList& out) const {
  if (k == 0 || k > points_.size()) {
    throw Error(ErrorKind::InvalidInput,
                "knn: k=" + std::to_string(k) + " outside [1, " +
                    std::to_string(points_.size()) + "]");
  }
  index_.knn(points_, q, k, out);
}

Vec3 canonical_sign(const Vec3& v) {
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (std::abs(v[a]) > std::abs(v[axis])) axis = a;
  }
  return v[axis] < 0.0 ? Vec3(-v) : v;
}

Vec3 pca_normal(std::span<const Vec3> neighborhood) {
  if (neighborhood.size() < 3) {
    throw Error(ErrorKind::InvalidInput, "pca_normal needs at least 3 points");
  }
  Vec3 mean = Vec3::Zero();
  for (const auto& p : neighborhood) mean += p;
  mean /= static_cast<double>(neighborhood.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : neighborhood) {
    const Vec3 d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  if (cov.trace() <= 1e-24) {
    throw Error(ErrorKind::DegenerateNeighborhood,
                "all neighbors coincide; normal is undefined");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  // Eigenvalues come back in increasing order.
  return canonical_sign(solver.eigenvectors().col(0).normalized());
}

Vec3 pca_normal(const PointCloud& cloud, std::size_t i, std::size_t k) {
  if (k < 3) throw Error(ErrorKind::InvalidInput, "pca_normal needs k >= 3");
  const NeighborList nbrs = cloud.knn(cloud.point(i), k);
  std::vector<Vec3> pts;
  pts.reserve(nbrs.size());
  for (auto idx : nbrs.indices) pts.push_back(cloud.point(idx));
  return pca_normal(pts);
}

}  // namespace ahs
