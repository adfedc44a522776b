// Acceptance runner. Prints one PASS/FAIL line per criterion; the criteria
// to run are given as arguments (all when none are given).
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ahs/pipeline.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ahs;
using namespace ahs::geometry;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void progress(const std::string& msg) { std::cerr << "  .. " << msg << std::endl; }

// ---------------------------------------------------------------- kernels

/// Random raw surface with pairwise normal angles well away from parallel,
/// so no degeneracy fallback kicks in.
RawSurface random_surface(Variant v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  RawSurface s;
  s.variant = v;
  s.anchor = oracle::random_in_box(rng, 0.5);
  s.offset = oracle::random_in_box(rng, 2.0);
  const int k = normal_count(v);
  for (;;) {
    for (int i = 0; i < k; ++i) s.normals[i] = oracle::random_unit(rng);
    bool ok = true;
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) ok = ok && s.normals[i].cross(s.normals[j]).norm() >= 0.05;
    }
    if (ok) break;
  }
  for (int i = 0; i < k; ++i) s.normals[i] *= scale(rng);
  return s;
}

/// Dense sampling of every face of the surface; faces are sectors of the
/// planes through the apex bounded by the other normals.
oracle::DenseResult dense_min(const RawSurface& s, const Vec3& q) {
  const int k = normal_count(s.variant);
  std::array<Vec3, 3> n;
  for (int i = 0; i < k; ++i) n[i] = s.normals[i].normalized();
  const Vec3 a = s.variant == Variant::Plane
                     ? s.anchor
                     : Vec3(s.anchor + 0.01 * s.offset.array().tanh().matrix());
  const double radius = 2.0 * (q - a).norm() + 1e-3;
  oracle::DenseResult best;
  for (int f = 0; f < k; ++f) {
    // Candidate sector edges: where the face plane meets another plane.
    std::vector<Vec3> rays;
    for (int j = 0; j < k; ++j) {
      if (j == f) continue;
      const Vec3 e = n[f].cross(n[j]).normalized();
      rays.push_back(e);
      rays.push_back(-e);
    }
    const auto r = oracle::dense_planar_min(a, n[f], q, radius, [&](const Vec3& x) {
      for (int j = 0; j < k; ++j) {
        if (j != f && (x - a).dot(n[j]) > 1e-12) return false;
      }
      return true;
    }, rays);
    best.coarse = std::min(best.coarse, r.coarse);
    best.refined = std::min(best.refined, r.refined);
    best.coarse_step = std::max(best.coarse_step, r.coarse_step);
  }
  return best;
}

Outcome kernel_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  bool ok = true;
  double worst_below = 0.0;   // max(refined - kernel)
  double worst_above = 0.0;   // max(kernel - refined)
  double worst_coarse = 0.0;  // max(kernel - coarse)
  int pairs = 0;
  for (Variant v : kVariants) {
    for (int t = 0; t < 1000; ++t) {
      const RawSurface s = random_surface(v, rng);
      const Vec3 q = s.anchor + oracle::random_in_box(rng, 1.0);
      const double d = evaluate(s, q).s.norm();
      const auto ref = dense_min(s, q);
      worst_below = std::max(worst_below, ref.refined - d);
      worst_above = std::max(worst_above, d - ref.refined);
      worst_coarse = std::max(worst_coarse, d - ref.coarse);
      ok = ok && d >= ref.refined - 1e-9 && d <= ref.coarse + 1e-12 &&
           std::abs(d - ref.refined) <= ref.coarse_step;
      ++pairs;
    }
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 60.0;
  return {ok, fmt("%d pairs, kernel-oracle in [-%.2e, %.2e], kernel-coarse max %.2e, %.1f s",
                  pairs, worst_below, worst_above, worst_coarse, secs)};
}

// -------------------------------------------------------------- gradients

std::vector<double> flatten(const RawSurface& s) {
  std::vector<double> x;
  for (int k = 0; k < normal_count(s.variant); ++k) {
    for (int d = 0; d < 3; ++d) x.push_back(s.normals[k][d]);
  }
  if (s.variant != Variant::Plane) {
    for (int d = 0; d < 3; ++d) x.push_back(s.offset[d]);
  }
  return x;
}

RawSurface unflatten(RawSurface s, const std::vector<double>& x) {
  std::size_t i = 0;
  for (int k = 0; k < normal_count(s.variant); ++k) {
    for (int d = 0; d < 3; ++d) s.normals[k][d] = x[i++];
  }
  if (s.variant != Variant::Plane) {
    for (int d = 0; d < 3; ++d) s.offset[d] = x[i++];
  }
  return s;
}

ModelState tiny_state(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(oracle::random_in_box(rng, 0.2));
  Hyper h;
  h.k1 = 5;
  h.k2 = 4;
  h.theta = 3.0;
  auto state = fixture::make_state(pts, GeometryMask{}, h);
  for (std::size_t i = 0; i < state.size(); ++i) {
    state.params[i].selected = static_cast<Variant>(i % 3);
    state.params[i].raw.dihedral_offset = oracle::random_in_box(rng, 1.0);
    state.params[i].raw.trihedral_offset = oracle::random_in_box(rng, 1.0);
    state.params[i].raw.scale = -1.0 + 0.2 * static_cast<double>(i);
    // Generic normals: the initial priors are nearly coplanar, which puts
    // branch boundaries close to almost every query.
    std::uniform_real_distribution<double> len(0.5, 2.0);
    auto& raw = state.params[i].raw;
    raw.plane = len(rng) * oracle::random_unit(rng);
    for (auto& m : raw.dihedral) m = len(rng) * oracle::random_unit(rng);
    for (auto& m : raw.trihedral) m = len(rng) * oracle::random_unit(rng);
  }
  return state;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  double worst_kernel = 0.0;
  int kernels = 0;
  int skipped = 0;
  for (Variant v : kVariants) {
    int done = 0;
    while (done < 300) {
      const RawSurface s = random_surface(v, rng);
      const Vec3 q = s.anchor + oracle::random_in_box(rng, 0.3);
      if (evaluate(s, q).margin < 1e-3) {
        ++skipped;  // branch boundary
        continue;
      }
      const auto g = kernel_gradient(s, q);
      std::vector<double> analytic;
      for (int k = 0; k < normal_count(v); ++k) {
        for (int d = 0; d < 3; ++d) analytic.push_back(g.normals[k][d]);
      }
      if (v != Variant::Plane) {
        for (int d = 0; d < 3; ++d) analytic.push_back(g.offset[d]);
      }
      for (int d = 0; d < 3; ++d) analytic.push_back(g.query[d]);
      std::vector<double> x = flatten(s);
      x.insert(x.end(), {q.x(), q.y(), q.z()});
      const std::size_t p = x.size() - 3;
      const auto fd = oracle::central_diff(x, [&](const std::vector<double>& y) {
        const Vec3 qq(y[p], y[p + 1], y[p + 2]);
        return evaluate(unflatten(s, std::vector<double>(y.begin(), y.begin() + p)), qq)
            .s.squaredNorm();
      });
      worst_kernel = std::max(worst_kernel, oracle::relative_error(analytic, fd));
      ++done;
      ++kernels;
    }
  }

  double worst_total = 0.0;
  int clouds = 0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto state = tiny_state(seed, 6 + seed % 5);
    Rng qrng(seed + 100);
    TrainConfig cfg;
    const auto queries = sample_queries(*state.cloud, 40, cfg.jitter, qrng);
    const auto alphas = sample_alphas(40, cfg.alpha_min, cfg.alpha_max, qrng);
    Gradient grad(state.size(), RawParams::zero());
    total_loss(state, queries, alphas, cfg, &grad);
    const std::size_t n = state.size();
    constexpr std::size_t P = RawParams::kSize;
    std::vector<double> x(n * P);
    std::vector<double> analytic(n * P);
    for (std::size_t i = 0; i < n; ++i) {
      state.params[i].raw.write(&x[i * P]);
      grad[i].write(&analytic[i * P]);
    }
    const auto fd = oracle::central_diff(x, [&](const std::vector<double>& y) {
      ModelState s = state;
      for (std::size_t i = 0; i < n; ++i) s.params[i].raw.read(&y[i * P]);
      return total_loss(s, queries, alphas, cfg).total;
    });
    worst_total = std::max(worst_total, oracle::relative_error(analytic, fd));
    ++clouds;
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_kernel < 1e-4 && worst_total < 1e-3 && secs < 60.0;
  return {ok, fmt("kernel rel err max %.2e over %d (skipped %d near branch boundaries), "
                  "total-loss rel err max %.2e over %d clouds, %.1f s",
                  worst_kernel, kernels, skipped, worst_total, clouds, secs)};
}

// -------------------------------------------------------------- exact fit

Outcome exact_fit() {
  struct Case {
    std::string name;
    ModelState state;
  };
  std::vector<Case> cases;

  {
    auto s = fixture::make_state(fixture::plane_grid(15, 0.5), GeometryMask{});
    fixture::set_all(s, Variant::Plane, {Vec3::UnitZ()});
    for (auto& p : s.params) {
      p.raw.dihedral = {Vec3::UnitZ(), Vec3::UnitZ()};
      p.raw.trihedral = {Vec3::UnitZ(), Vec3::UnitZ(), Vec3::UnitZ()};
      p.raw.dihedral_offset = Vec3::Zero();
      p.raw.trihedral_offset = Vec3::Zero();
    }
    cases.push_back({"plane-patch", std::move(s)});
  }
  {
    // A plane cannot represent a wedge neighborhood, so it is disabled; the
    // trihedral repeats a normal and degenerates to the same dihedral.
    const auto w = fixture::roof(60.0);
    GeometryMask mask;
    mask.plane = false;
    auto s = fixture::make_state(fixture::wedge_grid(w, 20, 6, 0.001), mask);
    fixture::set_wedge(s, w);
    for (auto& p : s.params) {
      p.raw.trihedral = {w.n1, w.n2, w.n1};
      p.raw.trihedral_offset = p.raw.dihedral_offset;
    }
    cases.push_back({"wedge", std::move(s)});
  }
  {
    auto s = fixture::make_state(fixture::corner_grid(6, 0.0015),
                                 GeometryMask::only(Variant::Trihedral));
    fixture::set_corner(s);
    cases.push_back({"box-corner", std::move(s)});
  }

  bool ok = true;
  std::string detail;
  for (auto& c : cases) {
    Rng rng(7);
    TrainConfig cfg;
    const auto q = sample_queries(*c.state.cloud, 1000, cfg.jitter, rng);
    const auto a = sample_alphas(1000, cfg.alpha_min, cfg.alpha_max, rng);
    const double local = loss_local(c.state);
    const double udf = loss_udf(c.state, q, a);
    ok = ok && local <= 1e-6 && udf <= 1e-6;
    detail += fmt("%s l_local %.1e l_udf %.1e (%zu pts, %s); ", c.name.c_str(), local, udf,
                  c.state.size(), c.state.geometries.to_string().c_str());
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// ------------------------------------------------------- end-to-end runs

RunConfig shape_run(ShapeKind kind, GeometryMask mask, double wedge_deg = 90.0) {
  RunConfig c;
  ShapeSpec s;
  s.kind = kind;
  s.points = 3000;
  s.wedge_angle_deg = wedge_deg;
  c.shape = s;
  c.geometries = mask;
  c.seed = 1;
  c.propagate_seed();
  c.mesh = false;
  return c;
}

class Runs {
 public:
  const ReconResult& get(const std::string& key, const RunConfig& cfg) {
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    progress("fitting " + key);
    const auto t0 = Clock::now();
    auto r = reconstruct(cfg);
    progress(fmt("%s done in %.1f s, cd1 %.6f", key.c_str(), seconds_since(t0),
                 r.metrics ? r.metrics->cd1 : -1.0));
    return cache_.emplace(key, std::move(r)).first->second;
  }

 private:
  std::map<std::string, ReconResult> cache_;
};

const GeometryMask kPlaneOnly = GeometryMask::only(Variant::Plane);

Outcome sphere_cd(Runs& runs) {
  const auto t0 = Clock::now();
  const auto& r = runs.get("sphere", shape_run(ShapeKind::Sphere, GeometryMask{}));
  const double secs = seconds_since(t0);
  const double cd = r.metrics->cd1;
  return {cd <= 0.005 && secs < 600.0,
          fmt("cd1 %.6f (recon->gt %.6f, gt->recon %.6f), %zu samples, %.1f s", cd,
              r.metrics->recon_to_gt, r.metrics->gt_to_recon, r.metrics->recon_count, secs)};
}

/// Mean Euclidean distance to the true surface of reconstructed samples
/// lying within `band` of the shape's sharp features.
std::pair<double, std::size_t> feature_band_error(const ReconResult& r, double band) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& p : r.samples.points) {
    if (r.shape->surface.feature_distance(p) > band) continue;
    sum += r.shape->surface.distance(p);
    ++count;
  }
  return {count ? sum / static_cast<double>(count) : 0.0, count};
}

Outcome sharp_ablation(Runs& runs) {
  const auto& wc = runs.get("wedge60", shape_run(ShapeKind::Wedge, GeometryMask{}, 60.0));
  const auto& wp = runs.get("wedge60-plane", shape_run(ShapeKind::Wedge, kPlaneOnly, 60.0));
  const auto& bc = runs.get("box", shape_run(ShapeKind::Box, GeometryMask{}));
  const auto& bp = runs.get("box-plane", shape_run(ShapeKind::Box, kPlaneOnly));
  const auto [ec, nc] = feature_band_error(wc, 0.02);
  const auto [ep, np] = feature_band_error(wp, 0.02);
  const bool ok = wc.metrics->cd1 <= wp.metrics->cd1 && bc.metrics->cd1 <= bp.metrics->cd1 &&
                  nc > 0 && np > 0 && ec < ep;
  return {ok, fmt("wedge(60) cd1 %.6f vs plane-only %.6f; box cd1 %.6f vs %.6f; "
                  "edge-band error %.6f (%zu pts) vs %.6f (%zu pts)",
                  wc.metrics->cd1, wp.metrics->cd1, bc.metrics->cd1, bp.metrics->cd1, ec, nc,
                  ep, np)};
}

Outcome boundary(Runs& runs) {
  const auto& c = runs.get("disk", shape_run(ShapeKind::OpenDisk, GeometryMask{}));
  const auto& p = runs.get("disk-plane", shape_run(ShapeKind::OpenDisk, kPlaneOnly));
  const double a = c.metrics->recon_to_gt;
  const double b = p.metrics->recon_to_gt;
  return {a <= b, fmt("open-disk recon->gt %.9f (combined) vs %.9f (plane-only); cd1 %.6f vs %.6f",
                      a, b, c.metrics->cd1, p.metrics->cd1)};
}

Outcome selection(Runs& runs) {
  const auto& r = runs.get("box", shape_run(ShapeKind::Box, GeometryMask{}));
  const auto& state = r.state;
  const auto& labels = r.shape->labels;
  std::vector<double> spacing(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    spacing[i] = state.cloud->knn(state.cloud->point(i), 2).distances[1];
  }
  std::vector<double> sorted = spacing;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];

  std::size_t flat = 0, flat_plane = 0, flat_sharp = 0, edge = 0, edge_sharp = 0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Variant v = state.params[i].selected;
    const bool sharp = v != Variant::Plane;
    bool single = true;
    for (auto j : state.patches[i].indices) single = single && labels[j] == labels[i];
    if (single) {
      ++flat;
      flat_plane += v == Variant::Plane;
      flat_sharp += sharp;
    }
    if (r.shape->surface.feature_distance(state.cloud->point(i)) <= 2.0 * median) {
      ++edge;
      edge_sharp += sharp;
    }
  }
  const double plane_rate = flat ? static_cast<double>(flat_plane) / flat : 0.0;
  const double flat_rate = flat ? static_cast<double>(flat_sharp) / flat : 0.0;
  const double edge_rate = edge ? static_cast<double>(edge_sharp) / edge : 0.0;
  const bool ok = flat > 0 && edge > 0 && plane_rate >= 0.8 && edge_rate >= 2.0 * flat_rate;
  return {ok, fmt("single-face points %zu, plane %.1f%%; edge points %zu (median spacing %.4f), "
                  "dihedral/trihedral %.1f%% vs flat %.1f%%",
                  flat, 100.0 * plane_rate, edge, median, 100.0 * edge_rate, 100.0 * flat_rate)};
}

Outcome udf_consistency(Runs& runs) {
  const auto& r = runs.get("sphere", shape_run(ShapeKind::Sphere, GeometryMask{}));
  const auto& state = r.state;
  Rng rng(808);
  TrainConfig cfg;
  const auto qs = sample_queries(*state.cloud, 1000, cfg.jitter, rng);
  const auto as = sample_alphas(1000, cfg.alpha_min, cfg.alpha_max, rng);
  double sum = 0.0;
  for (std::size_t j = 0; j < qs.size(); ++j) {
    const Vec3 s = geometric_displacement(state, qs[j]);
    const Vec3 mid = geometric_displacement(state, qs[j] + as[j] * s);
    sum += (mid / (1.0 - as[j]) - s).norm();
  }
  const double mean = sum / static_cast<double>(qs.size());
  return {mean <= 0.01, fmt("mean consistency residual %.2e over 1000 pairs", mean)};
}

Outcome determinism(Runs& runs) {
  const RunConfig cfg = shape_run(ShapeKind::Sphere, GeometryMask{});
  const auto& a = runs.get("sphere", cfg);
  const auto& b = runs.get("sphere-repeat", cfg);
  const bool traces = a.trace == b.trace;
  const bool metrics = report_json(cfg, a, false) == report_json(cfg, b, false);
  return {traces && metrics && !a.trace.empty(),
          fmt("%zu trace rows %s, metric reports %s", a.trace.size(),
              traces ? "identical" : "differ", metrics ? "identical" : "differ")};
}

Outcome metric_oracle() {
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<int> size(1, 200);
  int exact = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::vector<Vec3> a(size(rng));
    std::vector<Vec3> b(size(rng));
    for (auto& p : a) p = oracle::random_in_box(rng, 1.0);
    for (auto& p : b) p = oracle::random_in_box(rng, 1.0);
    exact += cd1(a, b).cd1 == oracle::brute_cd1(a, b);
  }
  const double unit = cd1(std::vector<Vec3>{Vec3::Zero()}, std::vector<Vec3>{Vec3::UnitX()}).cd1;
  return {exact == trials && unit == 1.0,
          fmt("%d/%d random pairs bitwise equal to the double loop, unit case %.17g", exact,
              trials, unit)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome(Runs&)>>> criteria = {
      {"kernel oracle", [](Runs&) { return kernel_oracle(); }},
      {"gradients", [](Runs&) { return gradients(); }},
      {"exact-fit zero loss", [](Runs&) { return exact_fit(); }},
      {"sphere end to end", sphere_cd},
      {"sharp-feature ablation", sharp_ablation},
      {"open boundary", boundary},
      {"selection sanity", selection},
      {"udf consistency", udf_consistency},
      {"determinism", determinism},
      {"metric oracle", [](Runs&) { return metric_oracle(); }},
  };

  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));
  if (wanted.empty()) {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) wanted.insert(i);
  }

  Runs runs;
  int failed = 0;
  for (int id : wanted) {
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    const auto& [name, run] = criteria[id - 1];
    Outcome o;
    try {
      o = run(runs);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << name << ": " << o.detail
              << std::endl;
  }
  return failed ? 1 : 0;
}
