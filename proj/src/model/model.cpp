#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

#include "ahs/model.hpp"

namespace ahs {

using geometry::RawSurface;
using geometry::SurfaceGradient;

bool GeometryMask::enabled(Variant v) const {
  switch (v) {
    case Variant::Plane: return plane;
    case Variant::Dihedral: return dihedral;
    case Variant::Trihedral: return trihedral;
  }
  return false;
}

Variant GeometryMask::simplest() const {
  for (Variant v : geometry::kVariants) {
    if (enabled(v)) return v;
  }
  throw Error(ErrorKind::InvalidInput, "no geometry variant enabled");
}

std::string GeometryMask::to_string() const {
  std::string out;
  for (Variant v : geometry::kVariants) {
    if (!enabled(v)) continue;
    if (!out.empty()) out += ',';
    out += geometry::to_string(v);
  }
  return out;
}

GeometryMask GeometryMask::parse(std::string_view text) {
  GeometryMask mask{false, false, false};
  std::string token;
  std::istringstream in{std::string(text)};
  while (std::getline(in, token, ',')) {
    token.erase(0, token.find_first_not_of(" \t"));
    token.erase(token.find_last_not_of(" \t") + 1);
    if (token == "plane") {
      mask.plane = true;
    } else if (token == "dihedral") {
      mask.dihedral = true;
    } else if (token == "trihedral") {
      mask.trihedral = true;
    } else {
      throw Error(ErrorKind::InvalidInput, "unknown geometry '" + token + "'");
    }
  }
  if (!mask.any()) {
    throw Error(ErrorKind::InvalidInput, "at least one geometry must be enabled");
  }
  return mask;
}

GeometryMask GeometryMask::only(Variant v) {
  GeometryMask mask{false, false, false};
  switch (v) {
    case Variant::Plane: mask.plane = true; break;
    case Variant::Dihedral: mask.dihedral = true; break;
    case Variant::Trihedral: mask.trihedral = true; break;
  }
  return mask;
}

RawParams RawParams::zero() {
  RawParams p;
  p.plane.setZero();
  for (auto& n : p.dihedral) n.setZero();
  p.dihedral_offset.setZero();
  for (auto& n : p.trihedral) n.setZero();
  p.trihedral_offset.setZero();
  p.scale = 0.0;
  return p;
}

void RawParams::write(double* out) const {
  auto put = [&out](const Vec3& v) {
    *out++ = v.x();
    *out++ = v.y();
    *out++ = v.z();
  };
  put(plane);
  for (const auto& n : dihedral) put(n);
  put(dihedral_offset);
  for (const auto& n : trihedral) put(n);
  put(trihedral_offset);
  *out = scale;
}

void RawParams::read(const double* in) {
  auto get = [&in](Vec3& v) {
    v = Vec3(in[0], in[1], in[2]);
    in += 3;
  };
  get(plane);
  for (auto& n : dihedral) get(n);
  get(dihedral_offset);
  for (auto& n : trihedral) get(n);
  get(trihedral_offset);
  scale = *in;
}

RawParams& RawParams::operator+=(const RawParams& other) {
  plane += other.plane;
  for (int i = 0; i < 2; ++i) dihedral[i] += other.dihedral[i];
  dihedral_offset += other.dihedral_offset;
  for (int i = 0; i < 3; ++i) trihedral[i] += other.trihedral[i];
  trihedral_offset += other.trihedral_offset;
  scale += other.scale;
  return *this;
}

double RawParams::max_abs() const {
  double flat[kSize];
  write(flat);
  double m = 0.0;
  for (double x : flat) m = std::max(m, std::abs(x));
  return m;
}

double scale_from_raw(double raw) {
  const double softplus = std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw)));
  return softplus + kScaleFloor;
}

double raw_from_scale(double r) {
  const double y = std::max(r - kScaleFloor, 1e-15);
  // inverse softplus: log(exp(y) - 1)
  return y > 30.0 ? y : std::log(std::expm1(y));
}

double scale_derivative(double raw) { return 1.0 / (1.0 + std::exp(-raw)); }

RawSurface ModelState::surface(std::size_t i, Variant v) const {
  const RawParams& raw = params[i].raw;
  RawSurface s;
  s.variant = v;
  s.anchor = cloud->point(i);
  switch (v) {
    case Variant::Plane:
      s.normals[0] = raw.plane;
      break;
    case Variant::Dihedral:
      s.normals[0] = raw.dihedral[0];
      s.normals[1] = raw.dihedral[1];
      s.offset = raw.dihedral_offset;
      break;
    case Variant::Trihedral:
      s.normals = raw.trihedral;
      s.offset = raw.trihedral_offset;
      break;
  }
  return s;
}

void ModelState::rebuild_patches() {
  const std::size_t n = cloud->size();
  if (hyper.k1 < 3 || hyper.k1 > n || hyper.k2 == 0 || hyper.k2 > n) {
    throw Error(ErrorKind::InvalidInput,
                "k1/k2 must lie in [3, n] / [1, n] for a cloud of " +
                    std::to_string(n) + " points");
  }
  patches.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cloud->knn(cloud->point(i), hyper.k1, patches[i]);
  }
}

void accumulate(RawParams& dst, Variant v, const SurfaceGradient& g,
                double weight) {
  switch (v) {
    case Variant::Plane:
      dst.plane += weight * g.normals[0];
      break;
    case Variant::Dihedral:
      dst.dihedral[0] += weight * g.normals[0];
      dst.dihedral[1] += weight * g.normals[1];
      dst.dihedral_offset += weight * g.offset;
      break;
    case Variant::Trihedral:
      for (int k = 0; k < 3; ++k) dst.trihedral[k] += weight * g.normals[k];
      dst.trihedral_offset += weight * g.offset;
      break;
  }
}

double residual(const ModelState& state, std::size_t i, Variant v) {
  const RawSurface surf = state.surface(i, v);
  const NeighborList& patch = state.patches[i];
  double sum = 0.0;
  for (auto idx : patch.indices) {
    sum += geometry::evaluate(surf, state.cloud->point(idx),
                              state.hyper.eps_parallel)
               .s.norm();
  }
  return sum / static_cast<double>(patch.size());
}

double residual(const ModelState& state, std::size_t i, Variant v,
                double weight, RawParams& grad) {
  const RawSurface surf = state.surface(i, v);
  const NeighborList& patch = state.patches[i];
  const double inv_k = 1.0 / static_cast<double>(patch.size());
  double sum = 0.0;
  for (auto idx : patch.indices) {
    const Vec3& q = state.cloud->point(idx);
    const geometry::Displacement d =
        geometry::evaluate(surf, q, state.hyper.eps_parallel);
    const double len = d.s.norm();
    sum += len;
    if (len > kKinkTol) {
      const SurfaceGradient g =
          geometry::backprop(surf, q, d.branch, (weight * inv_k / len) * d.s);
      accumulate(grad, v, g);
    }
  }
  return sum * inv_k;
}

Variant select_geometry(const ModelState& state, std::size_t i) {
  Variant best = state.geometries.simplest();
  double best_value = residual(state, i, best);
  for (Variant v : geometry::kVariants) {
    if (v <= best || !state.geometries.enabled(v)) continue;
    const double value = residual(state, i, v);
    if (value < best_value - state.hyper.select_margin) {
      best = v;
      best_value = value;
    }
  }
  return best;
}

std::size_t select_all(ModelState& state) {
  std::size_t changed = 0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Variant v = select_geometry(state, i);
    if (v != state.params[i].selected) ++changed;
    state.params[i].selected = v;
  }
  return changed;
}

void softmax_weights(std::span<const double> distances,
                     std::span<const double> scales, double theta,
                     std::span<double> out) {
  double zmax = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < distances.size(); ++l) {
    out[l] = -distances[l] / (theta * scales[l]);
    zmax = std::max(zmax, out[l]);
  }
  double total = 0.0;
  for (std::size_t l = 0; l < distances.size(); ++l) {
    out[l] = std::exp(out[l] - zmax);
    total += out[l];
  }
  for (std::size_t l = 0; l < distances.size(); ++l) out[l] /= total;
}

void evaluate_field(const ModelState& state, const Vec3& q, FieldEval& out) {
  out.q = q;
  state.cloud->knn(q, state.hyper.k2, out.neighbors);
  const std::size_t k = out.neighbors.size();
  out.scales.resize(k);
  out.weights.resize(k);
  out.local.resize(k);
  for (std::size_t l = 0; l < k; ++l) {
    out.scales[l] = scale_from_raw(state.params[out.neighbors.indices[l]].raw.scale);
  }
  softmax_weights(out.neighbors.distances, out.scales, state.hyper.theta,
                  out.weights);
  out.s.setZero();
  for (std::size_t l = 0; l < k; ++l) {
    const std::size_t j = out.neighbors.indices[l];
    out.local[l] = geometry::evaluate(state.selected_surface(j), q,
                                      state.hyper.eps_parallel);
    out.s += out.weights[l] * out.local[l].s;
  }
}

Vec3 backprop_field(const ModelState& state, const FieldEval& eval,
                    const Vec3& upstream, std::span<RawParams> grad) {
  const std::size_t k = eval.neighbors.size();
  Vec3 dq = Vec3::Zero();

  double mean_dot = 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    mean_dot += eval.weights[l] * upstream.dot(eval.local[l].s);
  }

  const double theta = state.hyper.theta;
  for (std::size_t l = 0; l < k; ++l) {
    const std::size_t j = eval.neighbors.indices[l];
    const Variant v = state.params[j].selected;
    const RawSurface surf = state.surface(j, v);

    const SurfaceGradient g = geometry::backprop(
        surf, eval.q, eval.local[l].branch, eval.weights[l] * upstream);
    accumulate(grad[j], v, g);
    dq += g.query;

    // Softmax logits z_l = -dist_l / (theta r_l).
    const double dz =
        eval.weights[l] * (upstream.dot(eval.local[l].s) - mean_dot);
    const double dist = eval.neighbors.distances[l];
    const double r = eval.scales[l];
    const double dr = dz * dist / (theta * r * r);
    grad[j].scale += dr * scale_derivative(state.params[j].raw.scale);
    if (dist > 0.0) {
      const Vec3 dir = (eval.q - state.cloud->point(j)) / dist;
      dq -= (dz / (theta * r)) * dir;
    }
  }
  return dq;
}

MergeWeights merge_weights(const ModelState& state, const Vec3& q) {
  const NeighborList nbrs = state.cloud->knn(q, state.hyper.k2);
  std::vector<double> scales(nbrs.size());
  for (std::size_t l = 0; l < nbrs.size(); ++l) {
    scales[l] = scale_from_raw(state.params[nbrs.indices[l]].raw.scale);
  }
  MergeWeights out;
  out.indices = nbrs.indices;
  out.weights.resize(nbrs.size());
  softmax_weights(nbrs.distances, scales, state.hyper.theta, out.weights);
  return out;
}

Vec3 geometric_displacement(const ModelState& state, const Vec3& q) {
  FieldEval eval;
  evaluate_field(state, q, eval);
  return eval.s;
}

namespace {

Vec3 tangent(const Vec3& n) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(helper).normalized();
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace

ModelState init_params(CloudPtr cloud, const InitConfig& config) {
  ModelState state;
  state.cloud = std::move(cloud);
  state.hyper = config.hyper;
  state.geometries = config.geometries;
  if (!state.geometries.any()) {
    throw Error(ErrorKind::InvalidInput, "at least one geometry must be enabled");
  }
  state.rebuild_patches();

  const std::size_t n = state.cloud->size();
  std::vector<double> spacing(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = state.patches[i].distances;
    spacing[i] = d.size() > 1 ? d[1] : 0.0;
  }
  const double r0 =
      std::max(median(spacing) / state.hyper.theta, 2.0 * kScaleFloor);
  const double raw_scale = raw_from_scale(r0);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double tilt = config.tilt_deg * std::numbers::pi / 180.0;
  const double len = config.normal_length;
  const Variant initial = state.geometries.simplest();

  state.params.resize(n);
  std::vector<Vec3> nbhd;
  for (std::size_t i = 0; i < n; ++i) {
    const NeighborList& patch = state.patches[i];
    nbhd.clear();
    Vec3 centroid = Vec3::Zero();
    for (auto idx : patch.indices) {
      nbhd.push_back(state.cloud->point(idx));
      centroid += nbhd.back();
    }
    centroid /= static_cast<double>(patch.size());
    const Vec3 normal = pca_normal(nbhd);

    // Anglehedral priors start as a shallow convex roof / cone that bends
    // toward the side where the neighborhood's centroid lies.
    Vec3 up = normal;
    if ((centroid - state.cloud->point(i)).dot(up) > 0.0) up = -up;

    const Vec3 b1 = tangent(up);
    const Vec3 b2 = up.cross(b1);
    const double phi_dihedral = angle(rng);
    const double phi_trihedral = angle(rng);

    const Vec3 axis = std::cos(phi_dihedral) * b1 + std::sin(phi_dihedral) * b2;
    const Eigen::AngleAxisd plus(tilt, axis);
    const Eigen::AngleAxisd minus(-tilt, axis);

    RawParams& raw = state.params[i].raw;
    raw.plane = len * normal;
    raw.dihedral[0] = len * (plus * up);
    raw.dihedral[1] = len * (minus * up);
    raw.dihedral_offset.setZero();
    for (int k = 0; k < 3; ++k) {
      const double phi = phi_trihedral + 2.0 * std::numbers::pi * k / 3.0;
      const Vec3 t = std::cos(phi) * b1 + std::sin(phi) * b2;
      raw.trihedral[k] = len * (std::cos(tilt) * up + std::sin(tilt) * t);
    }
    raw.trihedral_offset.setZero();
    raw.scale = raw_scale;
    state.params[i].selected = initial;
  }
  return state;
}

}  // namespace ahs
