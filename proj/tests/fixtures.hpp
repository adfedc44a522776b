// Small clouds with hand-set exact parameters, shared by the unit and
// acceptance tests.
#pragma once

#include <memory>
#include <random>
#include <vector>

#include "ahs/model.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace ahs;

/// Regular grid on z = 0.
inline std::vector<Vec3> plane_grid(int side, double half) {
  std::vector<Vec3> pts;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      pts.emplace_back(-half + 2.0 * half * i / (side - 1), -half + 2.0 * half * j / (side - 1),
                       0.0);
    }
  }
  return pts;
}

inline ModelState make_state(std::vector<Vec3> pts, GeometryMask mask, Hyper hyper = {}) {
  InitConfig init;
  init.hyper = hyper;
  init.geometries = mask;
  return init_params(std::make_shared<const PointCloud>(PointCloud::build(std::move(pts))),
                     init);
}

/// Sets every point's parameters for a variant to the same raw values and
/// selects that variant.
inline void set_all(ModelState& state, Variant v, const std::vector<Vec3>& normals,
                    const Vec3& offset = Vec3::Zero()) {
  for (auto& p : state.params) {
    switch (v) {
      case Variant::Plane: p.raw.plane = normals[0]; break;
      case Variant::Dihedral:
        p.raw.dihedral = {normals[0], normals[1]};
        p.raw.dihedral_offset = offset;
        break;
      case Variant::Trihedral:
        p.raw.trihedral = {normals[0], normals[1], normals[2]};
        p.raw.trihedral_offset = offset;
        break;
    }
    p.selected = v;
  }
}

/// Convex wedge with its edge on the y axis at height zero; faces have
/// outward normals n1, n2 (a roof: both faces slope downwards).
struct Wedge {
  Vec3 n1, n2;       // outward unit normals
  Vec3 d1, d2;       // in-face directions away from the edge
};

inline Wedge roof(double opening_deg) {
  const double half = 0.5 * opening_deg * std::numbers::pi / 180.0;
  Wedge w;
  w.d1 = Vec3(std::sin(half), 0.0, -std::cos(half));
  w.d2 = Vec3(-std::sin(half), 0.0, -std::cos(half));
  w.n1 = Vec3(std::cos(half), 0.0, std::sin(half));
  w.n2 = Vec3(-std::cos(half), 0.0, std::sin(half));
  return w;
}

/// Points on both faces of a roof wedge: rows along y, columns away from
/// the edge (the edge row itself included once).
inline std::vector<Vec3> wedge_grid(const Wedge& w, int rows, int cols, double spacing) {
  std::vector<Vec3> pts;
  for (int r = 0; r < rows; ++r) {
    const double y = (r - 0.5 * (rows - 1)) * spacing;
    pts.emplace_back(0.0, y, 0.0);
    for (int c = 1; c <= cols; ++c) {
      pts.push_back(Vec3(0.0, y, 0.0) + c * spacing * w.d1);
      pts.push_back(Vec3(0.0, y, 0.0) + c * spacing * w.d2);
    }
  }
  return pts;
}

/// Three quarter-squares meeting at the origin: the faces x = 0, y = 0,
/// z = 0 of the box [-L, 0]^3 (outward normals +x, +y, +z).
inline std::vector<Vec3> corner_grid(int side, double spacing) {
  std::vector<Vec3> pts;
  pts.emplace_back(0.0, 0.0, 0.0);
  for (int axis = 0; axis < 3; ++axis) {
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    for (int i = 0; i <= side; ++i) {
      for (int j = 0; j <= side; ++j) {
        if (i == 0 && j == 0) continue;
        // Shared edges belong to the face with the lower axis index.
        if (i == 0 && a1 < axis) continue;
        if (j == 0 && a2 < axis) continue;
        Vec3 p = Vec3::Zero();
        p[a1] = -i * spacing;
        p[a2] = -j * spacing;
        pts.push_back(p);
      }
    }
  }
  return pts;
}

/// Raw (pre-tanh) offset that moves the apex of point p onto `apex`.
/// Requires every component of apex - p to lie strictly inside (-0.01, 0.01).
inline Vec3 raw_offset_to(const Vec3& p, const Vec3& apex) {
  const Vec3 c = (apex - p) / geometry::kOffsetScale;
  return Vec3(std::atanh(c.x()), std::atanh(c.y()), std::atanh(c.z()));
}

/// Exact dihedral parameters for a roof wedge cloud: every apex is moved
/// onto the edge line (the y axis).
inline void set_wedge(ModelState& state, const Wedge& w) {
  set_all(state, Variant::Dihedral, {w.n1, w.n2});
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Vec3& p = state.cloud->point(i);
    state.params[i].raw.dihedral_offset = raw_offset_to(p, Vec3(0.0, p.y(), 0.0));
  }
}

/// Exact trihedral parameters for the corner cloud: every apex is moved onto
/// the origin.
inline void set_corner(ModelState& state) {
  set_all(state, Variant::Trihedral, {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()});
  for (std::size_t i = 0; i < state.size(); ++i) {
    state.params[i].raw.trihedral_offset = raw_offset_to(state.cloud->point(i), Vec3::Zero());
  }
}

}  // namespace fixture
