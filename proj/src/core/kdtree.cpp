#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ahs/core.hpp"

namespace ahs {
namespace {

constexpr std::uint32_t kLeafSize = 12;

struct Candidate {
  double key;
  std::uint32_t index;
};

inline bool before(double ka, std::uint32_t ia, double kb, std::uint32_t ib) {
  return ka < kb || (ka == kb && ia < ib);
}

/// Fixed-capacity sorted candidate list; k is small (<= a few dozen) in every
/// caller, so insertion beats a heap.
class BoundedList {
 public:
  explicit BoundedList(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  bool full() const { return items_.size() == k_; }
  double worst() const {
    return full() ? items_.back().key : std::numeric_limits<double>::infinity();
  }

  void offer(double key, std::uint32_t index) {
    if (full() && !before(key, index, items_.back().key, items_.back().index)) {
      return;
    }
    auto pos = std::upper_bound(
        items_.begin(), items_.end(), Candidate{key, index},
        [](const Candidate& a, const Candidate& b) {
          return before(a.key, a.index, b.key, b.index);
        });
    items_.insert(pos, Candidate{key, index});
    if (items_.size() > k_) items_.pop_back();
  }

  const std::vector<Candidate>& items() const { return items_; }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

inline double squared(double x) { return x * x; }

template <Metric M>
inline double point_key(const Vec3& a, const Vec3& b) {
  if constexpr (M == Metric::L2) {
    return (a - b).squaredNorm();
  } else {
    return std::abs(a.x() - b.x()) + std::abs(a.y() - b.y()) +
           std::abs(a.z() - b.z());
  }
}

template <Metric M>
inline double plane_key(double diff) {
  if constexpr (M == Metric::L2) {
    return squared(diff);
  } else {
    return std::abs(diff);
  }
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) {
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points.size() / kLeafSize + 2);
  if (!points.empty()) build(0, static_cast<std::uint32_t>(points.size()), points);
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end,
                           std::span<const Vec3> points) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{0.0, begin, end, -1, -1, 0});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points[order_[i]]);
    hi = hi.cwiseMax(points[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident: keep as leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points[a][axis] < points[b][axis];
                   });
  const double split = points[order_[mid]][axis];

  const std::int32_t left = build(begin, mid, points);
  const std::int32_t right = build(mid, end, points);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.axis = static_cast<std::uint8_t>(axis);
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

namespace {

template <Metric M>
void search(const std::vector<std::uint32_t>& order, const auto& nodes,
            std::int32_t id, std::span<const Vec3> points, const Vec3& q,
            BoundedList& best) {
  const auto& node = nodes[static_cast<std::size_t>(id)];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order[i];
      best.offer(point_key<M>(points[idx], q), idx);
    }
    return;
  }
  // Points with coordinate == split can sit on either side, so both children
  // are bounded by the split plane only in the non-strict sense.
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search<M>(order, nodes, near, points, q, best);
  if (!best.full() || plane_key<M>(diff) <= best.worst()) {
    search<M>(order, nodes, far, points, q, best);
  }
}

}  // namespace

void KdTree::knn(std::span<const Vec3> points, const Vec3& q, std::size_t k,
                 NeighborList& out) const {
  out.clear();
  if (nodes_.empty() || k == 0) return;
  BoundedList best(k);
  search<Metric::L2>(order_, nodes_, 0, points, q, best);
  out.indices.reserve(k);
  out.distances.reserve(k);
  for (const auto& c : best.items()) {
    out.indices.push_back(c.index);
    out.distances.push_back(std::sqrt(c.key));
  }
}

std::pair<std::uint32_t, double> KdTree::nearest(std::span<const Vec3> points,
                                                 const Vec3& q,
                                                 Metric metric) const {
  if (nodes_.empty()) {
    throw Error(ErrorKind::InvalidInput, "nearest() on an empty index");
  }
  BoundedList best(1);
  if (metric == Metric::L2) {
    search<Metric::L2>(order_, nodes_, 0, points, q, best);
    const auto& c = best.items().front();
    return {c.index, std::sqrt(c.key)};
  }
  search<Metric::L1>(order_, nodes_, 0, points, q, best);
  const auto& c = best.items().front();
  return {c.index, c.key};
}

}  // namespace ahs
