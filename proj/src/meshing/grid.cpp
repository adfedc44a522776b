#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "ahs/meshing.hpp"
#include "ahs/parallel.hpp"

namespace ahs {
namespace {

template <class T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(bits & 0xff),
      static_cast<unsigned char>((bits >> 8) & 0xff),
      static_cast<unsigned char>((bits >> 16) & 0xff),
      static_cast<unsigned char>((bits >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

template <class T>
T get_le(std::istream& in) {
  static_assert(sizeof(T) == 4);
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw Error(ErrorKind::Parse, "grid file truncated");
  }
  const std::uint32_t bits = std::uint32_t{bytes[0]} | (std::uint32_t{bytes[1]} << 8) |
                             (std::uint32_t{bytes[2]} << 16) |
                             (std::uint32_t{bytes[3]} << 24);
  T value;
  std::memcpy(&value, &bits, 4);
  return value;
}

}  // namespace

UdfGrid UdfGrid::sample(int resolution, const Bounds& bounds,
                        const std::function<Vec3(const Vec3&)>& displacement) {
  if (resolution < 8) {
    throw Error(ErrorKind::InvalidInput, "grid resolution must be >= 8");
  }
  UdfGrid grid;
  grid.resolution = resolution;
  grid.bounds = bounds;
  const std::size_t r = static_cast<std::size_t>(resolution);
  grid.values.resize(r * r * r);
  grid.displacements.resize(r * r * r);
  // One z-slab per task.
  parallel_for(r, [&](std::size_t iz) {
    for (int iy = 0; iy < resolution; ++iy) {
      for (int ix = 0; ix < resolution; ++ix) {
        const std::size_t idx = grid.index(ix, iy, static_cast<int>(iz));
        const Vec3 s = displacement(grid.center(ix, iy, static_cast<int>(iz)));
        grid.displacements[idx] = s;
        grid.values[idx] = s.norm();
      }
    }
  });
  return grid;
}

UdfGrid evaluate_grid(const ModelState& state, int resolution,
                      const Bounds& bounds) {
  return UdfGrid::sample(resolution, bounds, [&state](const Vec3& c) {
    thread_local FieldEval eval;
    evaluate_field(state, c, eval);
    return eval.s;
  });
}

void write_grid(std::ostream& out, const UdfGrid& grid) {
  const auto r = static_cast<std::int32_t>(grid.resolution);
  put_le(out, r);
  put_le(out, r);
  put_le(out, r);
  put_le(out, std::int32_t{0});
  for (double v : grid.values) put_le(out, static_cast<float>(v));
}

UdfGrid read_grid(std::istream& in, const Bounds& bounds) {
  const auto rx = get_le<std::int32_t>(in);
  const auto ry = get_le<std::int32_t>(in);
  const auto rz = get_le<std::int32_t>(in);
  const auto zero = get_le<std::int32_t>(in);
  if (rx != ry || ry != rz || zero != 0 || rx < 1) {
    throw Error(ErrorKind::Parse, "bad grid header");
  }
  UdfGrid grid;
  grid.resolution = rx;
  grid.bounds = bounds;
  const std::size_t count = static_cast<std::size_t>(rx) * rx * rx;
  grid.values.resize(count);
  for (auto& v : grid.values) v = get_le<float>(in);
  return grid;
}

}  // namespace ahs
