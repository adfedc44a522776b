#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "ahs/core.hpp"

namespace ahs::geometry {

/// Below this cross-product norm two normals count as parallel and the
/// surface degrades to the next-simpler kernel.
inline constexpr double kParallelEps = 1e-4;
/// Apex offsets are 0.01 * tanh(raw), componentwise.
inline constexpr double kOffsetScale = 0.01;

enum class BranchKind : std::uint8_t { Face, Edge, Apex };

/// The piece of a local surface that holds the closest point. `face` and
/// `other` index the surface's normals: Face is the plane of normal `face`,
/// Edge is the line where planes `face` and `other` meet, Apex is the apex.
struct Branch {
  BranchKind kind = BranchKind::Face;
  std::uint8_t face = 0;
  std::uint8_t other = 0;

  bool operator==(const Branch&) const = default;
};

/// Shortest vector from a query to a surface. `margin` is a distance-scale
/// estimate of how far the query is from switching branch.
struct Displacement {
  Vec3 s = Vec3::Zero();
  Branch branch;
  double margin = std::numeric_limits<double>::infinity();
};

struct Plane {
  Vec3 anchor;
  Vec3 normal;  // unit
};

struct Dihedral {
  Vec3 anchor;
  std::array<Vec3, 2> normals;  // unit
  Vec3 offset;                  // componentwise in (-0.01, 0.01)

  Vec3 apex() const { return anchor + offset; }
};

struct Trihedral {
  Vec3 anchor;
  std::array<Vec3, 3> normals;  // unit
  Vec3 offset;

  Vec3 apex() const { return anchor + offset; }
};

Displacement plane_displacement(const Plane& plane, const Vec3& q);

/// Half-plane {apex + t*edge + u*inface : u >= 0} with face normal `normal`.
/// Throws InvalidFrame unless the three directions are orthonormal.
Displacement halfplane_displacement(const Vec3& apex, const Vec3& edge,
                                    const Vec3& normal, const Vec3& inface,
                                    const Vec3& q);

/// Convex wedge: face k lies in the plane of normal k on the side where
/// <x - apex, other normal> <= 0. Ties between faces go to the lower index.
/// Throws DegenerateDihedral when the normals are (anti)parallel.
Displacement dihedral_displacement(const Dihedral& dihedral, const Vec3& q,
                                   double eps_parallel = kParallelEps);

/// Face k is the sector {x : <x - apex, m_k> = 0, <x - apex, m_j> <= 0 for
/// j != k}. Throws DegenerateTrihedral when any pair of normals is parallel.
Displacement trihedral_displacement(const Trihedral& trihedral, const Vec3& q,
                                    double eps_parallel = kParallelEps);

enum class Variant : std::uint8_t { Plane = 0, Dihedral = 1, Trihedral = 2 };

inline constexpr std::array<Variant, 3> kVariants = {
    Variant::Plane, Variant::Dihedral, Variant::Trihedral};

constexpr int normal_count(Variant v) { return static_cast<int>(v) + 1; }
const char* to_string(Variant v);

/// Local surface in its trainable form: raw (unnormalized) normals and a
/// pre-tanh offset. Planes carry no offset.
struct RawSurface {
  Variant variant = Variant::Plane;
  Vec3 anchor = Vec3::Zero();
  std::array<Vec3, 3> normals = {Vec3::UnitZ(), Vec3::UnitZ(), Vec3::UnitZ()};
  Vec3 offset = Vec3::Zero();
};

Vec3 clamp_offset(const Vec3& raw);
Vec3 apex(const RawSurface& surface);

Plane as_plane(const RawSurface& surface);
Dihedral as_dihedral(const RawSurface& surface);
Trihedral as_trihedral(const RawSurface& surface);

/// Displacement with degeneracy fallbacks: a parallel dihedral becomes the
/// plane of its first normal through the apex; a trihedral with a parallel
/// pair becomes the dihedral of the first non-parallel pair, else a plane.
/// Branch indices always refer to the surface's own normals.
Displacement evaluate(const RawSurface& surface, const Vec3& q,
                      double eps_parallel = kParallelEps);

/// Gradients with respect to the raw parameters (and the query).
struct SurfaceGradient {
  Vec3 anchor = Vec3::Zero();
  std::array<Vec3, 3> normals = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  Vec3 offset = Vec3::Zero();
  Vec3 query = Vec3::Zero();
};

/// Vector-Jacobian product of s(q) through the given branch: `upstream` is
/// dL/ds, the result holds dL/d(parameters) and dL/dq.
SurfaceGradient backprop(const RawSurface& surface, const Vec3& q,
                         const Branch& branch, const Vec3& upstream);

/// Gradient of ||s||^2 through the active branch (its subgradient on branch
/// boundaries).
SurfaceGradient kernel_gradient(const RawSurface& surface, const Vec3& q,
                                double eps_parallel = kParallelEps);

}  // namespace ahs::geometry
