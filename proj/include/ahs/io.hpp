#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ahs/core.hpp"

namespace ahs {

/// normalized = (input - center) / scale
struct Transform {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return (p - center) / scale; }
  Vec3 inverse(const Vec3& p) const { return p * scale + center; }
};

/// Centers the bounding box at the origin and scales the largest half-extent
/// to 1. A single point (or all coincident points) gets scale 1.
Transform fit_unit_cube(std::span<const Vec3> points);

enum class PointFormat { Xyz, Ply, Obj };

/// Chooses the format from the extension (.xyz/.txt/.pts, .ply, .obj).
PointFormat format_from_path(const std::filesystem::path& path);

/// Parses raw coordinates. Malformed records throw ParseError with the
/// 1-based line number; no points throws InvalidInput.
std::vector<Vec3> parse_points(std::istream& in, PointFormat format);
std::vector<Vec3> read_points(const std::filesystem::path& path);

struct LoadedCloud {
  std::vector<Vec3> points;  // normalized
  Transform transform;
};

LoadedCloud load_normalized(const std::filesystem::path& path);

/// Writes through a temporary sibling file and renames it into place.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer,
                  bool binary = false);

}  // namespace ahs
