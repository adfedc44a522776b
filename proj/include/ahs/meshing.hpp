#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "ahs/model.hpp"

namespace ahs {

struct Bounds {
  Vec3 lo = Vec3::Constant(-1.1);
  Vec3 hi = Vec3::Constant(1.1);
};

/// Unsigned distance sampled at voxel centers, x-fastest.
struct UdfGrid {
  int resolution = 0;
  Bounds bounds;
  std::vector<double> values;        // ||s(center)||
  std::vector<Vec3> displacements;   // s(center)

  Vec3 spacing() const { return (bounds.hi - bounds.lo) / resolution; }
  double voxel_size() const { return spacing().maxCoeff(); }
  std::size_t index(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(ix) +
           static_cast<std::size_t>(resolution) *
               (static_cast<std::size_t>(iy) +
                static_cast<std::size_t>(resolution) * static_cast<std::size_t>(iz));
  }
  Vec3 center(int ix, int iy, int iz) const {
    return bounds.lo +
           (Vec3(ix, iy, iz) + Vec3::Constant(0.5)).cwiseProduct(spacing());
  }

  /// Fills the grid from an arbitrary displacement function.
  static UdfGrid sample(int resolution, const Bounds& bounds,
                        const std::function<Vec3(const Vec3&)>& displacement);
};

/// Throws InvalidInput when resolution < 8.
UdfGrid evaluate_grid(const ModelState& state, int resolution,
                      const Bounds& bounds = {});

struct ProjectionConfig {
  std::size_t samples = 100000;
  double jitter = 0.03;
  double tol = 1e-3;
  int max_iters = 3;
  std::uint64_t seed = 0;
};

struct SurfaceSamples {
  std::vector<Vec3> points;
  std::vector<Vec3> provenance;  // starting query of each point
  std::size_t attempted = 0;
  std::size_t discarded = 0;
  /// More than half of the queries failed to converge.
  bool unstable = false;

  double discard_fraction() const {
    return attempted ? static_cast<double>(discarded) / attempted : 0.0;
  }
};

/// Moves queries sampled around the cloud along q <- q + s(q) until
/// ||s(q)|| <= tol; non-converged queries are dropped.
SurfaceSamples project_samples(const ModelState& state,
                               const ProjectionConfig& config);

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

/// Marching cubes over the voxel-center lattice of `values` at `iso`;
/// vertices on shared cell edges are welded.
TriMesh marching_cubes(std::span<const double> values, int resolution,
                       const Bounds& bounds, double iso);

/// Iso-surface of (udf - tau): a thin two-sided shell around the zero set.
/// Throws InvalidInput when tau < voxel size, EmptyMesh when nothing is
/// extracted.
TriMesh extract_shell_mesh(const UdfGrid& grid, double tau);

void write_obj(std::ostream& out, const TriMesh& mesh);
void write_xyz(std::ostream& out, std::span<const Vec3> points);
/// Header of four little-endian int32 (R, R, R, 0), then R^3 little-endian
/// float32 values, x-fastest.
void write_grid(std::ostream& out, const UdfGrid& grid);
UdfGrid read_grid(std::istream& in, const Bounds& bounds = {});

}  // namespace ahs
