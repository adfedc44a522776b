#include <algorithm>
#include <array>
#include <cmath>

#include "ahs/geometry.hpp"

namespace ahs::geometry {
namespace {

constexpr double kFrameTol = 1e-6;
constexpr double kFeasibleTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool unit(const Vec3& v) { return std::abs(v.norm() - 1.0) <= kFrameTol; }

/// How far a competing candidate is from taking over. One landing on the
/// same point (shared edge or apex) is a co-winner, so its own slack counts.
double switch_gap(const Vec3& best, const Vec3& other, double other_slack) {
  if ((best - other).norm() <= 1e-12) return other_slack;
  return other.norm() - best.norm();
}

struct SectorHit {
  Vec3 x;
  Branch branch;
  double slack;
};

/// Closest point to q on face k of a trihedral (a convex planar cone).
SectorHit closest_on_sector(const Vec3& a, const std::array<Vec3, 3>& m,
                            int k, const Vec3& q) {
  const Vec3& mk = m[k];
  const int j1 = k == 0 ? 1 : 0;
  const int j2 = k == 2 ? 1 : 2;
  const int js[2] = {j1, j2};

  const Vec3 qp = q - (q - a).dot(mk) * mk;
  double g[2];
  double tnorm[2];
  for (int t = 0; t < 2; ++t) {
    g[t] = (qp - a).dot(m[js[t]]);
    tnorm[t] = mk.cross(m[js[t]]).norm();
  }
  if (g[0] <= 0.0 && g[1] <= 0.0) {
    const double slack = std::min(-g[0] / tnorm[0], -g[1] / tnorm[1]);
    return {qp, Branch{BranchKind::Face, static_cast<std::uint8_t>(k), 0}, slack};
  }

  SectorHit best{a, Branch{BranchKind::Apex, static_cast<std::uint8_t>(k), 0}, kInf};
  double best_d2 = kInf;
  double apex_d2 = (a - q).squaredNorm();
  for (int t = 0; t < 2; ++t) {
    const int j = js[t];
    const int jo = js[1 - t];
    const Vec3 e = mk.cross(m[j]) / tnorm[t];
    const Vec3 x = a + (q - a).dot(e) * e;
    const double other = (x - a).dot(m[jo]);
    if (other > kFeasibleTol) continue;
    const double d2 = (x - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      const double along = std::abs((q - a).dot(e));
      best = {x,
              Branch{BranchKind::Edge, static_cast<std::uint8_t>(k),
                     static_cast<std::uint8_t>(j)},
              std::min({g[t] > 0.0 ? g[t] / tnorm[t] : kInf,
                        -other / tnorm[1 - t], along})};
    }
  }
  if (apex_d2 < best_d2) {
    double slack = kInf;
    for (int t = 0; t < 2; ++t) {
      const Vec3 e = mk.cross(m[js[t]]) / tnorm[t];
      slack = std::min(slack, std::abs((q - a).dot(e)));
    }
    best = {a, Branch{BranchKind::Apex, 0, 0}, slack};
  }
  return best;
}

}  // namespace

Displacement plane_displacement(const Plane& plane, const Vec3& q) {
  Displacement d;
  d.s = (plane.anchor - q).dot(plane.normal) * plane.normal;
  d.branch = Branch{BranchKind::Face, 0, 0};
  return d;
}

Displacement halfplane_displacement(const Vec3& apex, const Vec3& edge,
                                    const Vec3& normal, const Vec3& inface,
                                    const Vec3& q) {
  if (!unit(edge) || !unit(normal) || !unit(inface) ||
      std::abs(edge.dot(normal)) > kFrameTol ||
      std::abs(edge.dot(inface)) > kFrameTol ||
      std::abs(normal.dot(inface)) > kFrameTol) {
    throw Error(ErrorKind::InvalidFrame,
                "half-plane frame (edge, normal, inface) is not orthonormal");
  }
  const Vec3 qp = q - (q - apex).dot(normal) * normal;
  const double u = (qp - apex).dot(inface);
  Displacement d;
  if (u >= 0.0) {
    d.s = qp - q;
    d.branch = Branch{BranchKind::Face, 0, 0};
  } else {
    d.s = apex + (q - apex).dot(edge) * edge - q;
    d.branch = Branch{BranchKind::Edge, 0, 1};
  }
  d.margin = std::abs(u);
  return d;
}

Displacement dihedral_displacement(const Dihedral& dihedral, const Vec3& q,
                                   double eps_parallel) {
  const auto& n = dihedral.normals;
  const Vec3 c = n[0].cross(n[1]);
  const double cn = c.norm();
  if (cn < eps_parallel) {
    throw Error(ErrorKind::DegenerateDihedral, "dihedral normals are parallel");
  }
  const Vec3 e = c / cn;
  const Vec3 a = dihedral.apex();

  std::array<Displacement, 2> faces;
  int best = 0;
  for (int k = 0; k < 2; ++k) {
    const Vec3& nk = n[k];
    const Vec3& no = n[1 - k];
    const Vec3 inface = -(no - no.dot(nk) * nk).normalized();
    Displacement& face = faces[k];
    face = halfplane_displacement(a, e, nk, inface, q);
    face.branch.face = static_cast<std::uint8_t>(k);
    face.branch.other = static_cast<std::uint8_t>(1 - k);
    if (face.branch.kind == BranchKind::Face) face.branch.other = 0;
    if (face.s.norm() < faces[best].s.norm()) best = k;
  }
  Displacement out = faces[best];
  out.margin = std::min(out.margin, switch_gap(faces[best].s, faces[1 - best].s, faces[1 - best].margin));
  return out;
}

Displacement trihedral_displacement(const Trihedral& trihedral, const Vec3& q,
                                    double eps_parallel) {
  const auto& m = trihedral.normals;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (m[i].cross(m[j]).norm() < eps_parallel) {
        throw Error(ErrorKind::DegenerateTrihedral,
                    "trihedral has a parallel pair of normals");
      }
    }
  }
  const Vec3 a = trihedral.apex();

  std::array<SectorHit, 3> hits;
  int best = 0;
  for (int k = 0; k < 3; ++k) {
    hits[k] = closest_on_sector(a, m, k, q);
    if ((hits[k].x - q).norm() < (hits[best].x - q).norm()) best = k;
  }
  Displacement out;
  out.s = hits[best].x - q;
  out.branch = hits[best].branch;
  out.margin = hits[best].slack;
  for (int k = 0; k < 3; ++k) {
    if (k != best) out.margin = std::min(out.margin, switch_gap(out.s, hits[k].x - q, hits[k].slack));
  }
  return out;
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Plane: return "plane";
    case Variant::Dihedral: return "dihedral";
    case Variant::Trihedral: return "trihedral";
  }
  return "?";
}

}  // namespace ahs::geometry
