#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ahs/core.hpp"
#include "ahs/geometry.hpp"

namespace ahs {

using geometry::Variant;

/// Which local geometries may be selected (ablation switch).
struct GeometryMask {
  bool plane = true;
  bool dihedral = true;
  bool trihedral = true;

  bool enabled(Variant v) const;
  bool any() const { return plane || dihedral || trihedral; }
  Variant simplest() const;
  std::string to_string() const;

  /// Parses "plane,dihedral,trihedral" (any non-empty subset).
  static GeometryMask parse(std::string_view text);
  static GeometryMask only(Variant v);

  bool operator==(const GeometryMask&) const = default;
};

struct Hyper {
  std::size_t k1 = 36;    // selection / local-loss neighborhood
  std::size_t k2 = 12;    // merge neighborhood
  double theta = 100.0;   // merge temperature
  double eps_parallel = geometry::kParallelEps;
  /// A more complex variant is selected only when its residual is lower
  /// than the current choice by more than this.
  double select_margin = 1e-4;
};

/// Trainable per-point parameters, all in raw (pre-normalization,
/// pre-tanh, pre-softplus) form.
struct RawParams {
  static constexpr std::size_t kSize = 25;

  Vec3 plane = Vec3::UnitZ();
  std::array<Vec3, 2> dihedral = {Vec3::UnitZ(), Vec3::UnitZ()};
  Vec3 dihedral_offset = Vec3::Zero();
  std::array<Vec3, 3> trihedral = {Vec3::UnitZ(), Vec3::UnitZ(), Vec3::UnitZ()};
  Vec3 trihedral_offset = Vec3::Zero();
  double scale = 0.0;

  static RawParams zero();
  void write(double* out) const;
  void read(const double* in);
  RawParams& operator+=(const RawParams& other);
  double max_abs() const;
};

struct PointParams {
  RawParams raw;
  Variant selected = Variant::Plane;
};

inline constexpr double kScaleFloor = 1e-6;

/// r = softplus(raw) + kScaleFloor
double scale_from_raw(double raw);
double raw_from_scale(double r);
/// dr / draw
double scale_derivative(double raw);

struct ModelState {
  CloudPtr cloud;
  std::vector<PointParams> params;
  std::vector<NeighborList> patches;  // k1 nearest neighbors of each point, self first
  Hyper hyper;
  GeometryMask geometries;

  std::size_t size() const { return params.size(); }
  geometry::RawSurface surface(std::size_t i, Variant v) const;
  geometry::RawSurface selected_surface(std::size_t i) const {
    return surface(i, params[i].selected);
  }

  /// Recomputes the k1 patches from the cloud. Throws InvalidInput when
  /// k1 or k2 exceed the cloud size.
  void rebuild_patches();
};

/// Adds a surface gradient into the slot of variant v.
void accumulate(RawParams& dst, Variant v, const geometry::SurfaceGradient& g,
                double weight = 1.0);

/// Mean displacement norm from point i's variant-v surface to its k1
/// neighbors.
double residual(const ModelState& state, std::size_t i, Variant v);

/// Same, adding weight * d(residual)/d(params of i) into `grad`.
double residual(const ModelState& state, std::size_t i, Variant v,
                double weight, RawParams& grad);

/// Minimum residual over enabled variants, scanned from the simplest; a
/// variant wins only by more than hyper.select_margin.
Variant select_geometry(const ModelState& state, std::size_t i);

/// Re-selects every point. Returns how many selections changed.
std::size_t select_all(ModelState& state);

struct MergeWeights {
  std::vector<std::uint32_t> indices;
  std::vector<double> weights;
};

MergeWeights merge_weights(const ModelState& state, const Vec3& q);

/// Softmax over -dist_l / (theta * r_l).
void softmax_weights(std::span<const double> distances,
                     std::span<const double> scales, double theta,
                     std::span<double> out);

/// Evaluation record of the merged field at one query, kept for backprop.
struct FieldEval {
  Vec3 q = Vec3::Zero();
  Vec3 s = Vec3::Zero();
  NeighborList neighbors;
  std::vector<double> scales;
  std::vector<double> weights;
  std::vector<geometry::Displacement> local;
};

void evaluate_field(const ModelState& state, const Vec3& q, FieldEval& out);

/// Backpropagates dL/ds into `grad` (one slot per cloud point) and returns
/// dL/dq.
Vec3 backprop_field(const ModelState& state, const FieldEval& eval,
                    const Vec3& upstream, std::span<RawParams> grad);

/// Weighted average of the neighbors' selected-surface displacements.
Vec3 geometric_displacement(const ModelState& state, const Vec3& q);

struct InitConfig {
  Hyper hyper;
  GeometryMask geometries;
  std::uint64_t seed = 0;
  double tilt_deg = 5.0;
  /// Length of the raw normal vectors. Normalization makes the direction
  /// scale-free, so this sets the angular step size of the optimizer.
  double normal_length = 0.15;
};

/// Scales start at r = median neighbor spacing / theta, so theta * r is the
/// spacing.
ModelState init_params(CloudPtr cloud, const InitConfig& config);

}  // namespace ahs
