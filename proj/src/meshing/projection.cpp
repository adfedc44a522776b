#include "ahs/meshing.hpp"
#include "ahs/parallel.hpp"
#include "ahs/training.hpp"

namespace ahs {
namespace {

constexpr std::size_t kChunk = 1024;

}  // namespace

SurfaceSamples project_samples(const ModelState& state,
                               const ProjectionConfig& config) {
  if (config.samples == 0 || config.max_iters < 1 || !(config.tol > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "bad projection config");
  }
  Rng rng(config.seed);
  const auto starts = sample_queries(*state.cloud, config.samples, config.jitter, rng);

  const std::size_t m = starts.size();
  std::vector<Vec3> moved(m);
  std::vector<char> converged(m, 0);
  parallel_for(chunk_count(m, kChunk), [&](std::size_t c) {
    FieldEval eval;
    const std::size_t end = std::min(m, (c + 1) * kChunk);
    for (std::size_t j = c * kChunk; j < end; ++j) {
      Vec3 q = starts[j];
      evaluate_field(state, q, eval);
      for (int it = 0; it < config.max_iters; ++it) {
        q += eval.s;
        evaluate_field(state, q, eval);
        if (eval.s.norm() <= config.tol) {
          converged[j] = 1;
          break;
        }
      }
      moved[j] = q;
    }
  });

  SurfaceSamples out;
  out.attempted = m;
  for (std::size_t j = 0; j < m; ++j) {
    if (!converged[j]) {
      ++out.discarded;
      continue;
    }
    out.points.push_back(moved[j]);
    out.provenance.push_back(starts[j]);
  }
  out.unstable = 2 * out.discarded > out.attempted;
  return out;
}

}  // namespace ahs
