#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "ahs/error.hpp"

namespace ahs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Norm-type losses take the zero subgradient for residuals at or below
/// this length, so round-off at an exact fit does not move parameters.
inline constexpr double kKinkTol = 1e-12;

/// k nearest neighbors of a query, ordered by ascending distance (ties by
/// ascending index).
struct NeighborList {
  std::vector<std::uint32_t> indices;
  std::vector<double> distances;

  std::size_t size() const noexcept { return indices.size(); }
  void clear() noexcept {
    indices.clear();
    distances.clear();
  }
};

enum class Metric { L2, L1 };

/// Static kd-tree over a borrowed point array. Exact search; the caller keeps
/// the point storage alive and unchanged.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  /// Writes the k nearest points to `out`; distances are Euclidean.
  void knn(std::span<const Vec3> points, const Vec3& q, std::size_t k,
           NeighborList& out) const;

  /// Nearest point under `metric`. Ties resolve to the lower index.
  std::pair<std::uint32_t, double> nearest(std::span<const Vec3> points,
                                           const Vec3& q, Metric metric) const;

 private:
  struct Node {
    double split = 0.0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end,
                     std::span<const Vec3> points);

  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Immutable point set in normalized space with an exact k-NN index.
class PointCloud {
 public:
  /// Throws InvalidInput on empty input, non-finite coordinates, or points
  /// outside [-1.5, 1.5]^3.
  static PointCloud build(std::vector<Vec3> points);

  PointCloud(const PointCloud& other);
  PointCloud& operator=(const PointCloud& other);
  PointCloud(PointCloud&&) noexcept = default;
  PointCloud& operator=(PointCloud&&) noexcept = default;

  std::size_t size() const noexcept { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }
  std::span<const Vec3> points() const noexcept { return points_; }

  /// Throws InvalidInput when k == 0 or k > size().
  NeighborList knn(const Vec3& q, std::size_t k) const;
  void knn(const Vec3& q, std::size_t k, NeighborList& out) const;

  std::pair<std::uint32_t, double> nearest(const Vec3& q,
                                           Metric metric = Metric::L2) const {
    return index_.nearest(points_, q, metric);
  }

 private:
  explicit PointCloud(std::vector<Vec3> points);

  std::vector<Vec3> points_;
  KdTree index_;
};

using CloudPtr = std::shared_ptr<const PointCloud>;

/// Unit normal of the k-neighborhood of point i: eigenvector of the smallest
/// covariance eigenvalue, oriented so its largest-magnitude component is
/// positive.
Vec3 pca_normal(const PointCloud& cloud, std::size_t i, std::size_t k);

/// Same, over an explicit neighborhood.
Vec3 pca_normal(std::span<const Vec3> neighborhood);

/// Flips v so that its largest-magnitude component is positive (ties go to the
/// lowest axis).
Vec3 canonical_sign(const Vec3& v);

inline bool all_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace ahs
