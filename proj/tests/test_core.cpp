#include <doctest.h>

#include <random>

#include "ahs/core.hpp"
#include "oracles.hpp"

using namespace ahs;

TEST_SUITE("core") {
  TEST_CASE("build rejects empty, non-finite and out-of-range input") {
    CHECK_THROWS_AS(PointCloud::build({}), Error);
    try {
      PointCloud::build({Vec3(0, 0, std::nan(""))});
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidInput);
    }
    CHECK_THROWS_AS(PointCloud::build({Vec3(2.0, 0, 0)}), Error);
  }

  TEST_CASE("singleton cloud") {
    const auto cloud = PointCloud::build({Vec3::Zero()});
    const auto nl = cloud.knn(Vec3::Zero(), 1);
    REQUIRE(nl.size() == 1);
    CHECK(nl.indices[0] == 0);
    CHECK(nl.distances[0] == 0.0);
    CHECK_THROWS_AS(cloud.knn(Vec3::Zero(), 2), Error);
    CHECK_THROWS_AS(cloud.knn(Vec3::Zero(), 0), Error);
  }

  TEST_CASE("cube corners match linear scan") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i) pts.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    const auto cloud = PointCloud::build(pts);
    for (const auto& q : pts) {
      CHECK(cloud.knn(q, 3).indices == oracle::linear_knn(pts, q, 3));
    }
  }

  TEST_CASE("equidistant points resolve to the lower index") {
    const auto cloud = PointCloud::build({Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0)});
    const auto nl = cloud.knn(Vec3::Zero(), 3);
    CHECK(nl.indices == std::vector<std::uint32_t>{0, 1, 2});
    CHECK(cloud.nearest(Vec3::Zero(), Metric::L1).first == 0);
  }

  TEST_CASE("random clouds match linear scan") {
    std::mt19937_64 rng(7);
    std::vector<Vec3> pts;
    for (int i = 0; i < 3000; ++i) pts.push_back(oracle::random_in_box(rng, 1.0));
    const auto cloud = PointCloud::build(pts);
    for (int t = 0; t < 100; ++t) {
      const Vec3 q = oracle::random_in_box(rng, 1.2);
      const auto nl = cloud.knn(q, 36);
      CHECK(nl.indices == oracle::linear_knn(pts, q, 36));
      for (std::size_t j = 0; j < nl.size(); ++j) {
        CHECK(std::abs(nl.distances[j] - (pts[nl.indices[j]] - q).norm()) <= 1e-9);
        if (j > 0) CHECK(nl.distances[j] >= nl.distances[j - 1]);
      }
      // L1 nearest against a scan.
      double best = 1e300;
      std::uint32_t arg = 0;
      for (std::uint32_t i = 0; i < pts.size(); ++i) {
        const double d = oracle::l1(pts[i], q);
        if (d < best) {
          best = d;
          arg = i;
        }
      }
      const auto [idx, dist] = cloud.nearest(q, Metric::L1);
      CHECK(idx == arg);
      CHECK(dist == best);
    }
  }

  TEST_CASE("small clouds with duplicates match linear scan") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> grid(-2, 2);
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i) pts.emplace_back(0.1 * grid(rng), 0.1 * grid(rng), 0.1 * grid(rng));
    const auto cloud = PointCloud::build(pts);
    for (int t = 0; t < 50; ++t) {
      const Vec3 q(0.1 * grid(rng), 0.1 * grid(rng), 0.1 * grid(rng));
      CHECK(cloud.knn(q, 20).indices == oracle::linear_knn(pts, q, 20));
    }
  }

  TEST_CASE("copied clouds keep a working index") {
    std::mt19937_64 rng(3);
    std::vector<Vec3> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(oracle::random_in_box(rng, 1.0));
    PointCloud copy = PointCloud::build(pts);
    {
      const PointCloud original = PointCloud::build(pts);
      copy = original;
    }
    CHECK(copy.knn(pts[5], 1).indices[0] == 5);
  }

  TEST_CASE("pca normal of planar and noisy neighborhoods") {
    std::mt19937_64 rng(5);
    std::vector<Vec3> flat_z;
    std::vector<Vec3> flat_x;
    std::vector<Vec3> noisy;
    std::normal_distribution<double> noise(0.0, 1e-4);
    for (int i = 0; i < 40; ++i) {
      const Vec3 p = oracle::random_in_box(rng, 0.1);
      flat_z.emplace_back(p.x(), p.y(), 0.0);
      flat_x.emplace_back(0.0, p.y(), p.z());
      noisy.emplace_back(p.x(), p.y(), noise(rng));
    }
    const Vec3 nz = pca_normal(flat_z);
    CHECK((nz - Vec3::UnitZ()).norm() < 1e-9);
    CHECK(std::abs(nz.norm() - 1.0) < 1e-9);
    CHECK((pca_normal(flat_x) - Vec3::UnitX()).norm() < 1e-9);
    const double angle = std::acos(std::min(1.0, std::abs(pca_normal(noisy).z())));
    CHECK(angle < 5.0 * std::numbers::pi / 180.0);

    const auto cloud = PointCloud::build(flat_z);
    const Vec3 n = pca_normal(cloud, 0, 10);
    CHECK((n - Vec3::UnitZ()).norm() < 1e-9);
  }

  TEST_CASE("pca normal is orthogonal to in-plane directions") {
    std::mt19937_64 rng(9);
    const Vec3 normal = oracle::random_unit(rng);
    const auto [u, v] = oracle::plane_basis(normal);
    std::vector<Vec3> pts;
    std::uniform_real_distribution<double> d(-0.1, 0.1);
    for (int i = 0; i < 30; ++i) {
      const double a = d(rng);
      const double b = d(rng);
      pts.push_back(a * u + b * v);
    }
    const Vec3 n = pca_normal(pts);
    CHECK(std::abs(n.dot(u)) <= 1e-6);
    CHECK(std::abs(n.dot(v)) <= 1e-6);
    CHECK(n == canonical_sign(n));
  }

  TEST_CASE("coincident neighborhood is degenerate") {
    const std::vector<Vec3> same(5, Vec3(0.1, 0.2, 0.3));
    try {
      pca_normal(same);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DegenerateNeighborhood);
    }
  }

  TEST_CASE("canonical sign") {
    CHECK(canonical_sign(Vec3(0.1, -0.9, 0.2)) == Vec3(-0.1, 0.9, -0.2));
    CHECK(canonical_sign(Vec3(-0.5, 0.5, 0.0)) == Vec3(0.5, -0.5, 0.0));
  }
}
