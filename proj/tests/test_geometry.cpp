#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>

#include "cvxreg/geometry.hpp"

using namespace cvxreg;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("domain width") {
  SECTION("unit square diagonal") {
    REQUIRE(Domain::unit_cube(2).width() == Catch::Approx(std::numbers::sqrt2));
  }
  SECTION("ball diameter") {
    REQUIRE(Domain::ball(Eigen::VectorXd::Zero(3), 1.0).width() == Catch::Approx(2.0));
  }
  SECTION("right simplex hypotenuse") {
    Domain tri = Domain::polytope({vec2(0, 0), vec2(1, 0), vec2(0, 1)}, {{0, 1, 2}});
    REQUIRE(tri.width() == Catch::Approx(std::numbers::sqrt2));
  }
}

TEST_CASE("domain construction invariants") {
  SECTION("degenerate simplex rejected") {
    REQUIRE_THROWS_AS(
        Domain::polytope({vec2(0, 0), vec2(1, 0), vec2(2, 0)}, {{0, 1, 2}}),
        std::invalid_argument);
  }
  SECTION("overlapping interiors rejected") {
    REQUIRE_THROWS_AS(Domain::polytope({vec2(0, 0), vec2(1, 0), vec2(0, 1), vec2(0.4, 0.4)},
                                       {{0, 1, 2}, {0, 1, 3}}),
                      std::invalid_argument);
  }
  SECTION("nonpositive radius rejected") {
    REQUIRE_THROWS_AS(Domain::ball(Eigen::VectorXd::Zero(2), 0.0), std::invalid_argument);
  }
  SECTION("cube volume") {
    REQUIRE(Domain::unit_cube(3).volume() == Catch::Approx(1.0));
  }
  SECTION("ball volume d=2") {
    REQUIRE(Domain::ball(Eigen::VectorXd::Zero(2), 1.0).volume() ==
            Catch::Approx(std::numbers::pi));
  }
}

TEST_CASE("sample_design uniform draws") {
  SECTION("ball support containment") {
    Domain b = Domain::ball(Eigen::VectorXd::Zero(3), 1.0);
    auto pts = sample_design(b, 1000, 42);
    REQUIRE(pts.size() == 1000);
    for (const auto& p : pts) REQUIRE(p.norm() <= 1.0 + 1e-12);
  }
  SECTION("cube per-coordinate mean near 1/2") {
    Domain cube = Domain::unit_cube(2);
    auto pts = sample_design(cube, 10000, 7);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    for (const auto& p : pts) mean += p;
    mean /= 10000.0;
    // 4 sigma CLT band, sigma = 1/sqrt(12)/100
    REQUIRE(std::abs(mean[0] - 0.5) < 0.02);
    REQUIRE(std::abs(mean[1] - 0.5) < 0.02);
  }
  SECTION("deterministic given seed") {
    Domain tri = Domain::polytope({vec2(0, 0), vec2(1, 0), vec2(0, 1)}, {{0, 1, 2}});
    auto a = sample_design(tri, 50, 99);
    auto b = sample_design(tri, 50, 99);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE((a[i] - b[i]).norm() == 0.0);
  }
  SECTION("polytope membership") {
    Domain tri = Domain::polytope({vec2(0, 0), vec2(1, 0), vec2(0, 1)}, {{0, 1, 2}});
    for (const auto& p : sample_design(tri, 200, 3)) REQUIRE(tri.contains(p));
  }
  SECTION("non-uniform density hook rejected") {
    Domain cube = Domain::unit_cube(1);
    REQUIRE_THROWS_AS(sample_design(cube, 5, 1, [](const Eigen::VectorXd&) { return 2.0; }),
                      std::invalid_argument);
  }
  SECTION("n must be positive") {
    REQUIRE_THROWS_AS(sample_design(Domain::unit_cube(1), 0, 1), std::invalid_argument);
  }
}

TEST_CASE("disjoint_caps greedy packing") {
  Domain ball = Domain::ball(Eigen::VectorXd::Zero(2), 1.0);

  SECTION("pairwise angular separation") {
    const double eta = 0.5;
    auto caps = disjoint_caps(ball, eta, 100, 11);
    REQUIRE(!caps.empty());
    const double theta = std::acos(1.0 - eta);
    for (std::size_t i = 0; i < caps.size(); ++i) {
      REQUIRE(caps[i].normal.norm() == Catch::Approx(1.0));
      REQUIRE(caps[i].height == Catch::Approx(eta));
      for (std::size_t j = i + 1; j < caps.size(); ++j) {
        const double ang = std::acos(std::clamp(caps[i].normal.dot(caps[j].normal), -1.0, 1.0));
        REQUIRE(ang > 2.0 * theta);
      }
    }
  }

  SECTION("count vs brute-force circle packing") {
    const double eta = 0.01;
    auto caps = disjoint_caps(ball, eta, 1000, 5);
    // oracle: points on the circle separated by just over 2 theta
    const double theta = std::acos(1.0 - eta);
    const int grid_packing = static_cast<int>(std::floor(2.0 * std::numbers::pi /
                                                         (2.0 * theta + 1e-9)));
    REQUIRE(static_cast<int>(caps.size()) >= 10);
    REQUIRE(static_cast<int>(caps.size()) <= grid_packing);
    // the equiangular sweep should land close to the optimal packing
    REQUIRE(static_cast<int>(caps.size()) >= grid_packing - 1);
  }

  SECTION("eta >= radius is an error") {
    REQUIRE_THROWS_AS(disjoint_caps(ball, 1.0, 10, 1), std::invalid_argument);
  }

  SECTION("base disks disjoint in d=3") {
    Domain b3 = Domain::ball(Eigen::VectorXd::Zero(3), 2.0);
    auto caps = disjoint_caps(b3, 0.4, 64, 17);
    REQUIRE(caps.size() >= 4);
    const double theta = std::acos((2.0 - 0.4) / 2.0);
    for (std::size_t i = 0; i < caps.size(); ++i)
      for (std::size_t j = i + 1; j < caps.size(); ++j) {
        const double ang = std::acos(std::clamp(caps[i].normal.dot(caps[j].normal), -1.0, 1.0));
        REQUIRE(ang > 2.0 * theta);
      }
  }

  SECTION("cap set on the sphere is nonempty") {
    auto caps = disjoint_caps(ball, 0.3, 8, 2);
    for (const auto& c : caps) {
      // apex of the ball in the cap direction satisfies x . normal >= offset
      const Eigen::VectorXd apex = c.normal * 1.0;
      REQUIRE(apex.dot(c.normal) >= c.offset - 1e-12);
    }
  }
}

TEST_CASE("boundary points") {
  SECTION("polytope vertices") {
    Domain tri = Domain::polytope({vec2(0, 0), vec2(1, 0), vec2(0, 1)}, {{0, 1, 2}});
    REQUIRE(tri.boundary_points().size() == 3);
  }
  SECTION("sphere discretization size and radius") {
    Domain b = Domain::ball(vec2(1, 1), 2.0);
    auto pts = b.boundary_points();
    REQUIRE(pts.size() == 128);  // 64 d
    for (const auto& p : pts) REQUIRE((p - b.center()).norm() == Catch::Approx(2.0));
  }
}
