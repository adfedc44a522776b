#include <doctest.h>

#include <random>
#include <sstream>

#include "ahs/meshing.hpp"
#include "ahs/training.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ahs;

namespace {

ModelState flat_state() {
  auto state = fixture::make_state(fixture::plane_grid(15, 0.9), GeometryMask{});
  fixture::set_all(state, Variant::Plane, {Vec3::UnitZ()});
  for (auto& p : state.params) {
    p.raw.dihedral = {Vec3::UnitZ(), Vec3::UnitZ()};
    p.raw.trihedral = {Vec3::UnitZ(), Vec3::UnitZ(), Vec3::UnitZ()};
  }
  return state;
}

}  // namespace

TEST_SUITE("meshing") {
  TEST_CASE("plane field grid") {
    const auto state = flat_state();
    const auto grid = evaluate_grid(state, 16);
    CHECK(grid.values.size() == 16u * 16u * 16u);
    CHECK_THROWS_AS(evaluate_grid(state, 4), Error);
    for (int iz = 0; iz < 16; ++iz) {
      const Vec3 c = grid.center(8, 8, iz);
      CHECK(grid.values[grid.index(8, 8, iz)] == doctest::Approx(std::abs(c.z())).epsilon(1e-9));
    }
    // Stored values agree with fresh evaluations and with the cached vectors.
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> pick(0, 15);
    for (int t = 0; t < 100; ++t) {
      const int x = pick(rng);
      const int y = pick(rng);
      const int z = pick(rng);
      const std::size_t idx = grid.index(x, y, z);
      CHECK(grid.values[idx] == geometric_displacement(state, grid.center(x, y, z)).norm());
      CHECK(std::abs(grid.values[idx] - grid.displacements[idx].norm()) <= 1e-9);
      CHECK(grid.values[idx] >= 0.0);
    }
  }

  TEST_CASE("projection on an exact plane converges in one step") {
    const auto state = flat_state();
    ProjectionConfig cfg;
    cfg.samples = 2000;
    const auto out = project_samples(state, cfg);
    CHECK(out.discarded == 0);
    CHECK(out.points.size() == 2000);
    CHECK_FALSE(out.unstable);
    for (std::size_t i = 0; i < out.points.size(); ++i) {
      CHECK(std::abs(out.points[i].z()) <= 1e-12);
      CHECK(out.points[i].x() == doctest::Approx(out.provenance[i].x()));
      CHECK(geometric_displacement(state, out.points[i]).norm() <= cfg.tol);
    }
  }

  TEST_CASE("projection with zero jitter keeps the cloud points") {
    const auto state = flat_state();
    ProjectionConfig cfg;
    cfg.samples = 300;
    cfg.jitter = 0.0;
    const auto out = project_samples(state, cfg);
    for (const auto& p : out.points) CHECK(state.cloud->nearest(p).second <= 1e-12);
  }

  TEST_CASE("shell around a plane") {
    const auto state = flat_state();
    const auto grid = evaluate_grid(state, 32);
    const double tau = 2.0 * grid.voxel_size();
    const auto mesh = extract_shell_mesh(grid, tau);
    REQUIRE(!mesh.triangles.empty());
    for (const auto& v : mesh.vertices) {
      // Inside the cloud footprint both sheets sit at |z| = tau.
      if (std::abs(v.x()) < 0.7 && std::abs(v.y()) < 0.7) {
        CHECK(std::abs(std::abs(v.z()) - tau) <= 1e-9);
      }
      CHECK((v.array() >= grid.bounds.lo.array()).all());
      CHECK((v.array() <= grid.bounds.hi.array()).all());
    }
    for (const auto& t : mesh.triangles) {
      for (auto i : t) CHECK(i < mesh.vertices.size());
      const Vec3 n = (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                         .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
      CHECK(0.5 * n.norm() >= 1e-12);
    }
    CHECK_THROWS_AS(extract_shell_mesh(grid, 0.5 * grid.voxel_size()), Error);
  }

  TEST_CASE("shell around an analytic sphere") {
    const auto grid = UdfGrid::sample(128, Bounds{}, [](const Vec3& c) {
      const double r = c.norm();
      return Vec3(c * (0.5 / r - 1.0));
    });
    const double tau = 0.02;
    const auto mesh = extract_shell_mesh(grid, tau);
    const double h = grid.voxel_size();
    REQUIRE(tau >= h);
    int inner = 0;
    int outer = 0;
    for (const auto& v : mesh.vertices) {
      const double r = v.norm();
      if (r < 0.5) {
        CHECK(std::abs(r - (0.5 - tau)) <= h);
        ++inner;
      } else {
        CHECK(std::abs(r - (0.5 + tau)) <= h);
        ++outer;
      }
    }
    CHECK(inner > 0);
    CHECK(outer > inner);
  }

  TEST_CASE("empty iso-surface") {
    const auto grid = UdfGrid::sample(8, Bounds{}, [](const Vec3&) { return Vec3(1, 0, 0); });
    try {
      extract_shell_mesh(grid, 0.5);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyMesh);
    }
  }

  TEST_CASE("grid and text writers") {
    const auto grid = UdfGrid::sample(8, Bounds{}, [](const Vec3& c) { return c; });
    std::stringstream bin;
    write_grid(bin, grid);
    const std::string bytes = bin.str();
    REQUIRE(bytes.size() == 16 + 4 * 512);
    CHECK(static_cast<unsigned char>(bytes[0]) == 8);
    CHECK(bytes[1] == 0);
    CHECK(static_cast<unsigned char>(bytes[12]) == 0);
    const auto back = read_grid(bin);
    CHECK(back.resolution == 8);
    for (std::size_t i = 0; i < 512; ++i) {
      CHECK(back.values[i] == doctest::Approx(grid.values[i]).epsilon(1e-6));
    }

    TriMesh mesh;
    mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    mesh.triangles = {{0, 1, 2}};
    std::ostringstream obj;
    write_obj(obj, mesh);
    CHECK(obj.str() == "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    std::ostringstream xyz;
    const std::vector<Vec3> pts = {Vec3(0.5, -1, 2)};
    write_xyz(xyz, pts);
    CHECK(xyz.str() == "0.5 -1 2\n");
  }
}
