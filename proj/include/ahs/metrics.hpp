#pragma once

#include <span>

#include "ahs/core.hpp"

namespace ahs {

struct MetricReport {
  double cd1 = 0.0;
  double recon_to_gt = 0.0;  // mean L1 distance, recon -> nearest gt
  double gt_to_recon = 0.0;  // mean L1 distance, gt -> nearest recon
  std::size_t recon_count = 0;
  std::size_t gt_count = 0;
  double seconds = 0.0;
};

/// Mean L1 distance from each point of `from` to its L1-nearest point of
/// `to`, summed in index order.
double one_sided_l1(std::span<const Vec3> from, std::span<const Vec3> to);

/// Symmetric L1 chamfer: the average of the two one-sided means. Throws
/// InvalidInput when either set is empty.
MetricReport cd1(std::span<const Vec3> recon, std::span<const Vec3> gt);

}  // namespace ahs
