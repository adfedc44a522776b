#include "ahs/metrics.hpp"

#include <chrono>

#include "ahs/parallel.hpp"

namespace ahs {
namespace {

constexpr std::size_t kChunk = 2048;

}  // namespace

double one_sided_l1(std::span<const Vec3> from, std::span<const Vec3> to) {
  if (from.empty() || to.empty()) {
    throw Error(ErrorKind::InvalidInput, "chamfer needs non-empty point sets");
  }
  const KdTree tree(to);
  std::vector<double> nearest(from.size());
  parallel_for(chunk_count(from.size(), kChunk), [&](std::size_t c) {
    const std::size_t end = std::min(from.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      nearest[i] = tree.nearest(to, from[i], Metric::L1).second;
    }
  });
  double sum = 0.0;
  for (double d : nearest) sum += d;
  return sum / static_cast<double>(from.size());
}

MetricReport cd1(std::span<const Vec3> recon, std::span<const Vec3> gt) {
  const auto start = std::chrono::steady_clock::now();
  MetricReport r;
  r.recon_to_gt = one_sided_l1(recon, gt);
  r.gt_to_recon = one_sided_l1(gt, recon);
  r.cd1 = 0.5 * (r.recon_to_gt + r.gt_to_recon);
  r.recon_count = recon.size();
  r.gt_count = gt.size();
  r.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace ahs
