#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ahs/core.hpp"

namespace ahs {

enum class ShapeKind { PlanePatch, Wedge, Box, BoxCorner, OpenDisk, Sphere, Cylinder };

std::string to_string(ShapeKind kind);
/// Accepts "plane-patch", "wedge", "wedge(60)", "box", "box-corner",
/// "open-disk", "sphere", "cylinder". Throws InvalidInput otherwise.
ShapeKind parse_shape_kind(std::string_view text, double* wedge_angle = nullptr);

struct ShapeSpec {
  ShapeKind kind = ShapeKind::Sphere;
  double wedge_angle_deg = 90.0;  // opening angle between the two faces
  std::size_t points = 3000;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  /// Throws InvalidInput when points < 100, sigma < 0 or the angle is
  /// outside (0, 180).
  void validate() const;
  std::string label() const;
};

namespace shape {

/// Rectangle c + a u + b v, |a| <= half_u, |b| <= half_v.
struct Rect {
  Vec3 center, u, v;
  double half_u, half_v;
};
struct Disk {
  Vec3 center, normal;
  double radius;
};
struct Sphere {
  Vec3 center;
  double radius;
};
/// Lateral surface only; caps are separate disks.
struct Tube {
  Vec3 center, axis;
  double radius, half_height;
};
using Patch = std::variant<Rect, Disk, Sphere, Tube>;

struct Segment {
  Vec3 a, b;
};
struct Circle {
  Vec3 center, normal;
  double radius;
};
using Feature = std::variant<Segment, Circle>;

double area(const Patch& patch);
Vec3 closest_point(const Patch& patch, const Vec3& x);
Vec3 closest_point(const Feature& feature, const Vec3& x);

}  // namespace shape

/// Analytic surface made of patches, with sharp edges / boundaries listed as
/// features.
class ShapeSurface {
 public:
  ShapeSurface(std::vector<shape::Patch> patches, std::vector<shape::Feature> features);

  static ShapeSurface make(const ShapeSpec& spec);

  const std::vector<shape::Patch>& patches() const { return patches_; }
  const std::vector<shape::Feature>& features() const { return features_; }
  double area() const { return total_area_; }

  /// Exact Euclidean distance to the surface.
  double distance(const Vec3& x) const;
  Vec3 closest_point(const Vec3& x) const;
  /// Distance to the nearest sharp edge or boundary curve.
  double feature_distance(const Vec3& x) const;

  /// Area-uniform samples; labels receive the patch index of each sample.
  std::vector<Vec3> sample(std::size_t n, std::uint64_t seed,
                           std::vector<std::uint32_t>* labels = nullptr) const;

 private:
  std::vector<shape::Patch> patches_;
  std::vector<shape::Feature> features_;
  std::vector<double> areas_;
  double total_area_ = 0.0;
};

struct GeneratedShape {
  ShapeSpec spec;
  ShapeSurface surface;
  std::vector<Vec3> points;           // noisy samples in [-1, 1]^3
  std::vector<std::uint32_t> labels;  // source patch of each point
};

GeneratedShape generate_shape(const ShapeSpec& spec);

}  // namespace ahs
