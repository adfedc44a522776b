#include <cmath>

#include "ahs/parallel.hpp"
#include "ahs/training.hpp"

namespace ahs {
namespace {

constexpr std::size_t kQueryChunk = 512;
constexpr std::size_t kPointChunk = 256;

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

struct QuerySums {
  double cd = 0.0;
  double udf = 0.0;
};

/// Shared pass for the query-based losses. Gradients are reduced per chunk in
/// chunk order so the result is independent of scheduling.
QuerySums query_pass(const ModelState& state, std::span<const Vec3> queries,
                     std::span<const double> alphas, double w_cd, double w_udf,
                     bool want_cd, bool want_udf, Gradient* grad) {
  const std::size_t m = queries.size();
  const std::size_t chunks = chunk_count(m, kQueryChunk);
  std::vector<QuerySums> sums(chunks);
  std::vector<Gradient> partial(grad ? chunks : 0);
  const double inv_m = 1.0 / static_cast<double>(m);

  parallel_for(chunks, [&](std::size_t c) {
    Gradient* local_grad = nullptr;
    if (grad) {
      partial[c].assign(state.size(), RawParams::zero());
      local_grad = &partial[c];
    }
    FieldEval at_q;
    FieldEval at_mid;
    QuerySums acc;
    const std::size_t end = std::min(m, (c + 1) * kQueryChunk);
    for (std::size_t j = c * kQueryChunk; j < end; ++j) {
      const Vec3& q = queries[j];
      evaluate_field(state, q, at_q);
      Vec3 g_s = Vec3::Zero();

      if (want_cd) {
        const Vec3 x = q + at_q.s;
        const auto [idx, l1] = state.cloud->nearest(x, Metric::L1);
        acc.cd += l1;
        if (local_grad) {
          const Vec3 diff = x - state.cloud->point(idx);
          g_s += (w_cd * inv_m) *
                 Vec3(sign(diff.x()), sign(diff.y()), sign(diff.z()));
        }
      }

      if (want_udf) {
        const double alpha = alphas[j];
        const double keep = 1.0 - alpha;
        evaluate_field(state, q + alpha * at_q.s, at_mid);
        const Vec3 v = at_mid.s / keep - at_q.s;
        const double len = v.norm();
        acc.udf += len;
        if (local_grad && len > kKinkTol) {
          const Vec3 gv = (w_udf * inv_m / len) * v;
          const Vec3 d_mid = backprop_field(state, at_mid, gv / keep, *local_grad);
          g_s += alpha * d_mid - gv;
        }
      }

      if (local_grad && !g_s.isZero(0.0)) {
        backprop_field(state, at_q, g_s, *local_grad);
      }
    }
    sums[c] = acc;
  });

  QuerySums total;
  for (std::size_t c = 0; c < chunks; ++c) {
    total.cd += sums[c].cd;
    total.udf += sums[c].udf;
    if (grad) {
      for (std::size_t i = 0; i < state.size(); ++i) (*grad)[i] += partial[c][i];
    }
  }
  total.cd *= inv_m;
  total.udf *= inv_m;
  return total;
}

struct PointSums {
  double local = 0.0;
  double aux = 0.0;
};

/// Per-point residual terms. Point i only touches its own parameters, so the
/// gradient slots are written without contention.
PointSums point_pass(const ModelState& state, double w_local, double w_aux,
                     bool want_local, bool want_aux, Gradient* grad) {
  const std::size_t n = state.size();
  const std::size_t chunks = chunk_count(n, kPointChunk);
  std::vector<PointSums> sums(chunks);
  const double inv_n = 1.0 / static_cast<double>(n);

  parallel_for(chunks, [&](std::size_t c) {
    PointSums acc;
    RawParams scratch = RawParams::zero();
    const std::size_t end = std::min(n, (c + 1) * kPointChunk);
    for (std::size_t i = c * kPointChunk; i < end; ++i) {
      RawParams& slot = grad ? (*grad)[i] : scratch;
      const Variant selected = state.params[i].selected;
      if (want_local) {
        acc.local += grad ? residual(state, i, selected, w_local * inv_n, slot)
                          : residual(state, i, selected);
      }
      if (want_aux) {
        for (Variant v : geometry::kVariants) {
          if (v == selected || !state.geometries.enabled(v)) continue;
          acc.aux += grad ? residual(state, i, v, w_aux * inv_n, slot)
                          : residual(state, i, v);
        }
      }
    }
    sums[c] = acc;
  });

  PointSums total;
  for (const auto& s : sums) {
    total.local += s.local;
    total.aux += s.aux;
  }
  total.local *= inv_n;
  total.aux *= inv_n;
  return total;
}

void check_queries(std::span<const Vec3> queries) {
  if (queries.empty()) throw Error(ErrorKind::InvalidInput, "no query points");
}

void check_grad(const ModelState& state, const Gradient* grad) {
  if (grad && grad->size() != state.size()) {
    throw Error(ErrorKind::InvalidInput, "gradient buffer size mismatch");
  }
}

}  // namespace

std::vector<Vec3> sample_queries(const PointCloud& cloud, std::size_t m,
                                 double jitter, Rng& rng) {
  if (m == 0) throw Error(ErrorKind::InvalidInput, "query count must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);
  std::uniform_real_distribution<double> offset(-jitter, jitter);
  std::vector<Vec3> out;
  out.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    Vec3 q = cloud.point(pick(rng));
    if (jitter > 0.0) {
      const double dx = offset(rng);
      const double dy = offset(rng);
      const double dz = offset(rng);
      q += Vec3(dx, dy, dz);
    }
    out.push_back(q);
  }
  return out;
}

std::vector<double> sample_alphas(std::size_t m, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(m);
  for (auto& a : out) a = dist(rng);
  return out;
}

double loss_cd(const ModelState& state, std::span<const Vec3> queries,
               Gradient* grad, double weight) {
  check_queries(queries);
  check_grad(state, grad);
  return query_pass(state, queries, {}, weight, 0.0, true, false, grad).cd;
}

double loss_local(const ModelState& state, Gradient* grad, double weight,
                  double aux_weight) {
  check_grad(state, grad);
  const PointSums ps = point_pass(state, weight, weight * aux_weight, true,
                                  aux_weight > 0.0, grad);
  return ps.local + aux_weight * ps.aux;
}

double loss_aux(const ModelState& state, Gradient* grad, double weight) {
  check_grad(state, grad);
  return point_pass(state, 0.0, weight, false, true, grad).aux;
}

double loss_udf(const ModelState& state, std::span<const Vec3> queries,
                std::span<const double> alphas, Gradient* grad, double weight) {
  check_queries(queries);
  check_grad(state, grad);
  if (alphas.size() != queries.size()) {
    throw Error(ErrorKind::InvalidInput, "one alpha per query required");
  }
  return query_pass(state, queries, alphas, 0.0, weight, false, true, grad).udf;
}

double loss_udf(const ModelState& state, std::span<const Vec3> queries,
                Rng& rng, double alpha_min, double alpha_max) {
  const auto alphas = sample_alphas(queries.size(), alpha_min, alpha_max, rng);
  return loss_udf(state, queries, alphas);
}

LossTerms total_loss(const ModelState& state, std::span<const Vec3> queries,
                     std::span<const double> alphas, const TrainConfig& config,
                     Gradient* grad) {
  check_queries(queries);
  check_grad(state, grad);
  const bool want_udf = alphas.size() == queries.size();
  if (config.w_udf > 0.0 && !want_udf) {
    throw Error(ErrorKind::InvalidInput, "one alpha per query required");
  }
  const QuerySums qs = query_pass(state, queries, alphas, config.w_cd,
                                  config.w_udf, true, want_udf, grad);
  const PointSums ps = point_pass(state, config.w_local, config.w_local * config.w_aux,
                                  true, config.w_aux > 0.0, grad);
  LossTerms t;
  t.l_cd = qs.cd;
  t.l_udf = qs.udf;
  t.l_selected = ps.local;
  t.l_aux = ps.aux;
  t.l_local = ps.local + config.w_aux * ps.aux;
  t.total = config.w_cd * t.l_cd + config.w_local * t.l_local + config.w_udf * t.l_udf;
  return t;
}

}  // namespace ahs
