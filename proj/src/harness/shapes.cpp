#include "ahs/shapes.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

namespace ahs {
namespace {

using namespace shape;

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// Any unit vector orthogonal to n.
Vec3 perpendicular(const Vec3& n) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(helper).normalized();
}

Vec3 sample_patch(const Patch& patch, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return std::visit(
      Overloaded{
          [&](const Rect& r) -> Vec3 {
            const double a = (2.0 * unit(rng) - 1.0) * r.half_u;
            const double b = (2.0 * unit(rng) - 1.0) * r.half_v;
            return r.center + a * r.u + b * r.v;
          },
          [&](const Disk& d) -> Vec3 {
            const Vec3 e1 = perpendicular(d.normal);
            const Vec3 e2 = d.normal.cross(e1);
            const double rho = d.radius * std::sqrt(unit(rng));
            const double phi = 2.0 * kPi * unit(rng);
            return d.center + rho * (std::cos(phi) * e1 + std::sin(phi) * e2);
          },
          [&](const Sphere& s) -> Vec3 {
            std::normal_distribution<double> normal(0.0, 1.0);
            Vec3 dir;
            do {
              const double x = normal(rng);
              const double y = normal(rng);
              const double z = normal(rng);
              dir = Vec3(x, y, z);
            } while (dir.norm() < 1e-12);
            return s.center + s.radius * dir.normalized();
          },
          [&](const Tube& t) -> Vec3 {
            const Vec3 e1 = perpendicular(t.axis);
            const Vec3 e2 = t.axis.cross(e1);
            const double phi = 2.0 * kPi * unit(rng);
            const double h = (2.0 * unit(rng) - 1.0) * t.half_height;
            return t.center + h * t.axis +
                   t.radius * (std::cos(phi) * e1 + std::sin(phi) * e2);
          }},
      patch);
}

Rect rect(const Vec3& center, const Vec3& u, const Vec3& v, double hu, double hv) {
  return Rect{center, u.normalized(), v.normalized(), hu, hv};
}

}  // namespace

namespace shape {

double area(const Patch& patch) {
  return std::visit(
      Overloaded{[](const Rect& r) { return 4.0 * r.half_u * r.half_v; },
                 [](const Disk& d) { return kPi * d.radius * d.radius; },
                 [](const Sphere& s) { return 4.0 * kPi * s.radius * s.radius; },
                 [](const Tube& t) { return 4.0 * kPi * t.radius * t.half_height; }},
      patch);
}

Vec3 closest_point(const Patch& patch, const Vec3& x) {
  return std::visit(
      Overloaded{
          [&](const Rect& r) -> Vec3 {
            const Vec3 d = x - r.center;
            const double a = std::clamp(d.dot(r.u), -r.half_u, r.half_u);
            const double b = std::clamp(d.dot(r.v), -r.half_v, r.half_v);
            return r.center + a * r.u + b * r.v;
          },
          [&](const Disk& k) -> Vec3 {
            Vec3 radial = x - k.center;
            radial -= radial.dot(k.normal) * k.normal;
            const double len = radial.norm();
            if (len > k.radius) radial *= k.radius / len;
            return k.center + radial;
          },
          [&](const Sphere& s) -> Vec3 {
            const Vec3 d = x - s.center;
            const double len = d.norm();
            const Vec3 dir = len > 0.0 ? Vec3(d / len) : Vec3(Vec3::UnitZ());
            return s.center + s.radius * dir;
          },
          [&](const Tube& t) -> Vec3 {
            const Vec3 d = x - t.center;
            const double h = d.dot(t.axis);
            Vec3 radial = d - h * t.axis;
            const double len = radial.norm();
            const Vec3 dir = len > 0.0 ? Vec3(radial / len) : perpendicular(t.axis);
            return t.center + std::clamp(h, -t.half_height, t.half_height) * t.axis +
                   t.radius * dir;
          }},
      patch);
}

Vec3 closest_point(const Feature& feature, const Vec3& x) {
  return std::visit(
      Overloaded{[&](const Segment& s) -> Vec3 {
                   const Vec3 ab = s.b - s.a;
                   const double t = std::clamp((x - s.a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
                   return s.a + t * ab;
                 },
                 [&](const Circle& c) -> Vec3 {
                   Vec3 radial = x - c.center;
                   radial -= radial.dot(c.normal) * c.normal;
                   const double len = radial.norm();
                   const Vec3 dir = len > 0.0 ? Vec3(radial / len) : perpendicular(c.normal);
                   return c.center + c.radius * dir;
                 }},
      feature);
}

}  // namespace shape

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::PlanePatch: return "plane-patch";
    case ShapeKind::Wedge: return "wedge";
    case ShapeKind::Box: return "box";
    case ShapeKind::BoxCorner: return "box-corner";
    case ShapeKind::OpenDisk: return "open-disk";
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Cylinder: return "cylinder";
  }
  return "unknown";
}

ShapeKind parse_shape_kind(std::string_view text, double* wedge_angle) {
  if (text.starts_with("wedge(") && text.ends_with(")")) {
    const auto inner = text.substr(6, text.size() - 7);
    double angle = 0.0;
    const auto [ptr, ec] = std::from_chars(inner.data(), inner.data() + inner.size(), angle);
    if (ec != std::errc() || ptr != inner.data() + inner.size()) {
      throw Error(ErrorKind::InvalidInput, "bad wedge angle: " + std::string(text));
    }
    if (wedge_angle) *wedge_angle = angle;
    return ShapeKind::Wedge;
  }
  for (ShapeKind k : {ShapeKind::PlanePatch, ShapeKind::Wedge, ShapeKind::Box,
                      ShapeKind::BoxCorner, ShapeKind::OpenDisk, ShapeKind::Sphere,
                      ShapeKind::Cylinder}) {
    if (text == to_string(k)) return k;
  }
  throw Error(ErrorKind::InvalidInput, "unknown shape kind: " + std::string(text));
}

void ShapeSpec::validate() const {
  if (points < 100) throw Error(ErrorKind::InvalidInput, "shape needs >= 100 points");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorKind::InvalidInput, "noise sigma must be >= 0");
  }
  if (kind == ShapeKind::Wedge && !(wedge_angle_deg > 0.0 && wedge_angle_deg < 180.0)) {
    throw Error(ErrorKind::InvalidInput, "wedge angle must lie in (0, 180)");
  }
}

std::string ShapeSpec::label() const {
  if (kind != ShapeKind::Wedge) return to_string(kind);
  char buf[32];
  std::snprintf(buf, sizeof buf, "wedge(%g)", wedge_angle_deg);
  return buf;
}

ShapeSurface::ShapeSurface(std::vector<Patch> patches, std::vector<Feature> features)
    : patches_(std::move(patches)), features_(std::move(features)) {
  for (const auto& p : patches_) {
    areas_.push_back(shape::area(p));
    total_area_ += areas_.back();
  }
}

ShapeSurface ShapeSurface::make(const ShapeSpec& spec) {
  spec.validate();
  const Vec3 X = Vec3::UnitX();
  const Vec3 Y = Vec3::UnitY();
  const Vec3 Z = Vec3::UnitZ();
  std::vector<Patch> patches;
  std::vector<Feature> features;
  auto rect_outline = [&](const Rect& r) {
    const Vec3 a = r.half_u * r.u;
    const Vec3 b = r.half_v * r.v;
    const Vec3 c[4] = {r.center - a - b, r.center + a - b, r.center + a + b,
                       r.center - a + b};
    for (int k = 0; k < 4; ++k) features.push_back(Segment{c[k], c[(k + 1) % 4]});
  };

  switch (spec.kind) {
    case ShapeKind::PlanePatch: {
      const Rect r = rect(Vec3::Zero(), X, Y, 0.8, 0.8);
      patches.push_back(r);
      rect_outline(r);
      break;
    }
    case ShapeKind::Wedge: {
      // Edge along y; the two faces open downwards, symmetric about x = 0.
      const double half = 0.5 * spec.wedge_angle_deg * kPi / 180.0;
      const double width = 0.8;
      const Vec3 edge_mid(0.0, 0.0, 0.5 * width * std::cos(half));
      for (double side : {1.0, -1.0}) {
        const Vec3 down(side * std::sin(half), 0.0, -std::cos(half));
        patches.push_back(rect(edge_mid + 0.5 * width * down, Y, down, 0.8, 0.5 * width));
      }
      features.push_back(Segment{edge_mid - 0.8 * Y, edge_mid + 0.8 * Y});
      break;
    }
    case ShapeKind::Box: {
      const Vec3 h(0.6, 0.45, 0.35);
      for (int axis = 0; axis < 3; ++axis) {
        const int a1 = (axis + 1) % 3;
        const int a2 = (axis + 2) % 3;
        for (double side : {-1.0, 1.0}) {
          Vec3 c = Vec3::Zero();
          c[axis] = side * h[axis];
          patches.push_back(rect(c, Vec3::Unit(a1), Vec3::Unit(a2), h[a1], h[a2]));
        }
        // Edges parallel to this axis.
        for (double s1 : {-1.0, 1.0}) {
          for (double s2 : {-1.0, 1.0}) {
            Vec3 a = Vec3::Zero();
            a[a1] = s1 * h[a1];
            a[a2] = s2 * h[a2];
            Vec3 b = a;
            a[axis] = -h[axis];
            b[axis] = h[axis];
            features.push_back(Segment{a, b});
          }
        }
      }
      break;
    }
    case ShapeKind::BoxCorner: {
      // Three squares meeting at the corner (0.4, 0.4, 0.4), extending in -x, -y, -z.
      const double c = 0.4;
      const Vec3 corner = Vec3::Constant(c);
      for (int axis = 0; axis < 3; ++axis) {
        const int a1 = (axis + 1) % 3;
        const int a2 = (axis + 2) % 3;
        Vec3 center = Vec3::Zero();
        center[axis] = c;
        patches.push_back(rect(center, Vec3::Unit(a1), Vec3::Unit(a2), c, c));
        Vec3 end = corner;
        end[axis] = -c;
        features.push_back(Segment{corner, end});
      }
      break;
    }
    case ShapeKind::OpenDisk:
      patches.push_back(Disk{Vec3::Zero(), Z, 0.7});
      features.push_back(Circle{Vec3::Zero(), Z, 0.7});
      break;
    case ShapeKind::Sphere:
      patches.push_back(Sphere{Vec3::Zero(), 0.5});
      break;
    case ShapeKind::Cylinder: {
      const double r = 0.4;
      const double h = 0.5;
      patches.push_back(Tube{Vec3::Zero(), Z, r, h});
      for (double side : {-1.0, 1.0}) {
        patches.push_back(Disk{side * h * Z, Z, r});
        features.push_back(Circle{side * h * Z, Z, r});
      }
      break;
    }
  }
  return ShapeSurface(std::move(patches), std::move(features));
}

double ShapeSurface::distance(const Vec3& x) const {
  return (closest_point(x) - x).norm();
}

Vec3 ShapeSurface::closest_point(const Vec3& x) const {
  Vec3 best = Vec3::Zero();
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& p : patches_) {
    const Vec3 c = shape::closest_point(p, x);
    const double d = (c - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double ShapeSurface::feature_distance(const Vec3& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : features_) {
    best = std::min(best, (shape::closest_point(f, x) - x).norm());
  }
  return best;
}

std::vector<Vec3> ShapeSurface::sample(std::size_t n, std::uint64_t seed,
                                       std::vector<std::uint32_t>* labels) const {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::uint32_t> pick(areas_.begin(), areas_.end());
  std::vector<Vec3> out;
  out.reserve(n);
  if (labels) {
    labels->clear();
    labels->reserve(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t k = patches_.size() == 1 ? 0 : pick(rng);
    out.push_back(sample_patch(patches_[k], rng));
    if (labels) labels->push_back(k);
  }
  return out;
}

GeneratedShape generate_shape(const ShapeSpec& spec) {
  GeneratedShape g{spec, ShapeSurface::make(spec), {}, {}};
  g.points = g.surface.sample(spec.points, spec.seed, &g.labels);
  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (auto& p : g.points) {
      for (int d = 0; d < 3; ++d) p[d] = std::clamp(p[d] + noise(rng), -1.0, 1.0);
    }
  }
  return g;
}

}  // namespace ahs
