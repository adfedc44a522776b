#include <cmath>

#include "ahs/geometry.hpp"

namespace ahs::geometry {
namespace {

Displacement remap(Displacement d, std::uint8_t i, std::uint8_t j) {
  const std::uint8_t map[2] = {i, j};
  if (d.branch.kind != BranchKind::Apex) {
    d.branch.face = map[d.branch.face];
    if (d.branch.kind == BranchKind::Edge) d.branch.other = map[d.branch.other];
  }
  return d;
}

}  // namespace

Vec3 clamp_offset(const Vec3& raw) {
  return kOffsetScale * raw.array().tanh().matrix();
}

Vec3 apex(const RawSurface& surface) {
  if (surface.variant == Variant::Plane) return surface.anchor;
  return surface.anchor + clamp_offset(surface.offset);
}

Plane as_plane(const RawSurface& surface) {
  return Plane{apex(surface), surface.normals[0].normalized()};
}

Dihedral as_dihedral(const RawSurface& surface) {
  return Dihedral{surface.anchor,
                  {surface.normals[0].normalized(), surface.normals[1].normalized()},
                  clamp_offset(surface.offset)};
}

Trihedral as_trihedral(const RawSurface& surface) {
  return Trihedral{surface.anchor,
                   {surface.normals[0].normalized(),
                    surface.normals[1].normalized(),
                    surface.normals[2].normalized()},
                   clamp_offset(surface.offset)};
}

Displacement evaluate(const RawSurface& surface, const Vec3& q,
                      double eps_parallel) {
  switch (surface.variant) {
    case Variant::Plane:
      return plane_displacement(as_plane(surface), q);

    case Variant::Dihedral: {
      const Dihedral d = as_dihedral(surface);
      if (d.normals[0].cross(d.normals[1]).norm() < eps_parallel) {
        return plane_displacement(Plane{d.apex(), d.normals[0]}, q);
      }
      return dihedral_displacement(d, q, eps_parallel);
    }

    case Variant::Trihedral: {
      const Trihedral t = as_trihedral(surface);
      const auto& m = t.normals;
      const bool ok01 = m[0].cross(m[1]).norm() >= eps_parallel;
      const bool ok02 = m[0].cross(m[2]).norm() >= eps_parallel;
      const bool ok12 = m[1].cross(m[2]).norm() >= eps_parallel;
      if (ok01 && ok02 && ok12) return trihedral_displacement(t, q, eps_parallel);

      const std::uint8_t pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
      const bool ok[3] = {ok01, ok02, ok12};
      for (int p = 0; p < 3; ++p) {
        if (!ok[p]) continue;
        const auto i = pairs[p][0];
        const auto j = pairs[p][1];
        const Dihedral d{t.anchor, {m[i], m[j]}, t.offset};
        return remap(dihedral_displacement(d, q, eps_parallel), i, j);
      }
      return plane_displacement(Plane{t.apex(), m[0]}, q);
    }
  }
  return {};
}

SurfaceGradient backprop(const RawSurface& surface, const Vec3& q,
                         const Branch& branch, const Vec3& upstream) {
  SurfaceGradient g;
  const Vec3 a = apex(surface);
  const Vec3& u = upstream;

  // Gradients with respect to the unit normals and the apex first.
  std::array<Vec3, 3> gn = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  Vec3 ga = Vec3::Zero();

  switch (branch.kind) {
    case BranchKind::Face: {
      // s = <a - q, n> n
      const Vec3 n = surface.normals[branch.face].normalized();
      const Vec3 w = a - q;
      const double un = u.dot(n);
      ga = un * n;
      g.query = -un * n;
      gn[branch.face] = un * w + w.dot(n) * u;
      break;
    }
    case BranchKind::Edge: {
      // s = a + <q - a, e> e - q,  e = (n_f x n_o) / |n_f x n_o|
      const Vec3 nf = surface.normals[branch.face].normalized();
      const Vec3 no = surface.normals[branch.other].normalized();
      const Vec3 c = nf.cross(no);
      const double cn = c.norm();
      const Vec3 e = c / cn;
      const Vec3 w = q - a;
      const double t = w.dot(e);
      const double ue = u.dot(e);
      ga = u - ue * e;
      g.query = ue * e - u;
      const Vec3 ge = ue * w + t * u;
      const Vec3 gc = (ge - ge.dot(e) * e) / cn;
      gn[branch.face] += no.cross(gc);
      gn[branch.other] += gc.cross(nf);
      break;
    }
    case BranchKind::Apex: {
      ga = u;
      g.query = -u;
      break;
    }
  }

  g.anchor = ga;
  if (surface.variant != Variant::Plane) {
    const Eigen::Array3d th = surface.offset.array().tanh();
    g.offset = (kOffsetScale * (1.0 - th * th) * ga.array()).matrix();
  }
  for (int i = 0; i < normal_count(surface.variant); ++i) {
    const Vec3& raw = surface.normals[i];
    const double len = raw.norm();
    const Vec3 n = raw / len;
    g.normals[i] = (gn[i] - gn[i].dot(n) * n) / len;
  }
  return g;
}

SurfaceGradient kernel_gradient(const RawSurface& surface, const Vec3& q,
                                double eps_parallel) {
  const Displacement d = evaluate(surface, q, eps_parallel);
  return backprop(surface, q, d.branch, 2.0 * d.s);
}

}  // namespace ahs::geometry
