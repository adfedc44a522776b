#include <ostream>
#include <unordered_map>

#include "ahs/meshing.hpp"
#include "tri_table.hpp"

namespace ahs {
namespace {

// Corner offsets and edge endpoints in the table's convention.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

TriMesh marching_cubes(std::span<const double> values, int resolution,
                       const Bounds& bounds, double iso) {
  TriMesh mesh;
  const int r = resolution;
  const Vec3 h = (bounds.hi - bounds.lo) / r;
  auto lattice = [&](int x, int y, int z) {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(r) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(r) * z);
  };
  auto position = [&](int x, int y, int z) {
    return Vec3(bounds.lo + (Vec3(x, y, z) + Vec3::Constant(0.5)).cwiseProduct(h));
  };

  // Welds vertices by (lower lattice point, axis) of the lattice edge.
  std::unordered_map<std::uint64_t, std::uint32_t> welded;
  auto edge_vertex = [&](const int a[3], const int b[3]) -> std::uint32_t {
    int lo[3];
    int axis = 0;
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(a[d], b[d]);
      if (a[d] != b[d]) axis = d;
    }
    const std::uint64_t key = lattice(lo[0], lo[1], lo[2]) * 3 + axis;
    if (auto it = welded.find(key); it != welded.end()) return it->second;
    const double va = values[lattice(a[0], a[1], a[2])] - iso;
    const double vb = values[lattice(b[0], b[1], b[2])] - iso;
    const double t = va == vb ? 0.5 : va / (va - vb);
    const Vec3 p = position(a[0], a[1], a[2]) +
                   t * (position(b[0], b[1], b[2]) - position(a[0], a[1], a[2]));
    const auto id = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(p);
    welded.emplace(key, id);
    return id;
  };

  for (int z = 0; z + 1 < r; ++z) {
    for (int y = 0; y + 1 < r; ++y) {
      for (int x = 0; x + 1 < r; ++x) {
        int corners[8][3];
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          corners[c][0] = x + kCorner[c][0];
          corners[c][1] = y + kCorner[c][1];
          corners[c][2] = z + kCorner[c][2];
          if (values[lattice(corners[c][0], corners[c][1], corners[c][2])] < iso) {
            cube |= 1 << c;
          }
        }
        if (cube == 0 || cube == 255) continue;
        const auto& row = detail::kTriTable[cube];
        for (int t = 0; row[t] != -1; t += 3) {
          std::array<std::uint32_t, 3> tri;
          for (int v = 0; v < 3; ++v) {
            const auto& e = kEdge[row[t + v]];
            tri[v] = edge_vertex(corners[e[0]], corners[e[1]]);
          }
          const Vec3& p0 = mesh.vertices[tri[0]];
          const double area2 =
              (mesh.vertices[tri[1]] - p0).cross(mesh.vertices[tri[2]] - p0).norm();
          if (0.5 * area2 < 1e-12) continue;
          mesh.triangles.push_back(tri);
        }
      }
    }
  }
  return mesh;
}

TriMesh extract_shell_mesh(const UdfGrid& grid, double tau) {
  if (!(tau >= grid.voxel_size() * (1.0 - 1e-12))) {
    throw Error(ErrorKind::InvalidInput, "tau must be at least one voxel");
  }
  TriMesh mesh = marching_cubes(grid.values, grid.resolution, grid.bounds, tau);
  if (mesh.triangles.empty()) {
    throw Error(ErrorKind::EmptyMesh, "shell iso-surface is empty");
  }
  return mesh;
}

void write_obj(std::ostream& out, const TriMesh& mesh) {
  const auto old_precision = out.precision(9);
  for (const auto& v : mesh.vertices) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  out.precision(old_precision);
}

void write_xyz(std::ostream& out, std::span<const Vec3> points) {
  const auto old_precision = out.precision(9);
  for (const auto& p : points) {
    out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  out.precision(old_precision);
}

}  // namespace ahs
