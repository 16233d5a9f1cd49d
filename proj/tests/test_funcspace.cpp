#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cvxreg/funcspace.hpp"
#include "cvxreg/geometry.hpp"

using namespace cvxreg;

namespace {

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

MaxAffine abs_fn() {
  Eigen::VectorXd p(1), n(1);
  p << 1.0;
  n << -1.0;
  return MaxAffine({{p, 0.0}, {n, 0.0}});
}

}  // namespace

TEST_CASE("max-affine evaluation") {
  SECTION("|x| at 0.5") { REQUIRE(abs_fn()(vec1(0.5)) == Catch::Approx(0.5)); }

  SECTION("single piece is affine") {
    Eigen::VectorXd a(2);
    a << 2.0, -1.0;
    MaxAffine f({{a, 0.5}});
    Eigen::VectorXd x(2);
    x << 0.3, 0.7;
    REQUIRE(f(x) == Catch::Approx(a.dot(x) + 0.5));
  }

  SECTION("crossing pieces") {
    Eigen::VectorXd z(1), two(1);
    z << 0.0;
    two << 2.0;
    MaxAffine f({{z, 3.0}, {two, 0.0}});
    REQUIRE(f(vec1(1.0)) == Catch::Approx(3.0));
    REQUIRE(f(vec1(2.0)) == Catch::Approx(4.0));
  }

  SECTION("dimension mismatch") {
    Eigen::VectorXd x2(2);
    x2 << 0.0, 0.0;
    REQUIRE_THROWS_AS(abs_fn()(x2), std::invalid_argument);
  }

  SECTION("at least one piece") { REQUIRE_THROWS_AS(MaxAffine({}), std::invalid_argument); }

  SECTION("lipschitz bound is max piece norm") {
    Eigen::VectorXd a(1), b(1);
    a << 3.0;
    b << -5.0;
    REQUIRE(MaxAffine({{a, 0.0}, {b, 1.0}}).lipschitz() == Catch::Approx(5.0));
  }
}

TEST_CASE("max-affine randomized convexity") {
  Rng rng(31);
  Domain cube = Domain::unit_cube(2);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<AffinePiece> pieces;
    for (int i = 0; i < 4; ++i) pieces.push_back({rng.normal_vector(2), rng.normal()});
    RealFunction f{MaxAffine(pieces)};
    REQUIRE(convexity_spot_check(f, cube, 1000, 100 + trial));
  }
}

TEST_CASE("quadratic handle") {
  SECTION("PSD accepted, evaluates") {
    Quadratic q(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 1.0);
    Eigen::VectorXd x(2);
    x << 1.0, 2.0;
    REQUIRE(q(x) == Catch::Approx(6.0));
  }
  SECTION("indefinite rejected") {
    Eigen::MatrixXd q(1, 1);
    q << -1.0;
    REQUIRE_THROWS_AS(Quadratic(q, Eigen::VectorXd::Zero(1), 0.0), std::invalid_argument);
  }
}

TEST_CASE("continuous norm Monte Carlo") {
  Domain interval = Domain::interval(0.0, 1.0);
  RealFunction id = RealFunction::custom([](const Eigen::VectorXd& x) { return x[0]; });
  RealFunction zero = RealFunction::zero();

  SECTION("identical functions give zero") { REQUIRE(l2_nu_sq(id, id, interval, 1000, 1) == 0.0); }
  SECTION("integral of x^2 over [0,1]") {
    const double v = l2_nu_sq(id, zero, interval, 1000000, 12);
    REQUIRE(std::abs(v - 1.0 / 3.0) < 0.01);
  }
  SECTION("symmetry in the pair") {
    REQUIRE(l2_nu_sq(id, zero, interval, 5000, 3) == l2_nu_sq(zero, id, interval, 5000, 3));
  }
  SECTION("nonnegative") { REQUIRE(l2_nu_sq(id, zero, interval, 100, 4) >= 0.0); }
}

TEST_CASE("discrete norm") {
  Eigen::VectorXd a(2), b(2);
  a << 0.0, 0.0;
  b << 2.0, 0.0;
  SECTION("equal vectors") { REQUIRE(l2_disc_sq(a, a) == 0.0); }
  SECTION("(0,0) vs (2,0) gives 2") { REQUIRE(l2_disc_sq(a, b) == Catch::Approx(2.0)); }
  SECTION("(1,2,3) vs zeros gives 14/3") {
    Eigen::VectorXd u(3), z(3);
    u << 1.0, 2.0, 3.0;
    z.setZero();
    REQUIRE(l2_disc_sq(u, z) == Catch::Approx(14.0 / 3.0));
  }
  SECTION("length mismatch") {
    Eigen::VectorXd c(3);
    c.setZero();
    REQUIRE_THROWS_AS(l2_disc_sq(a, c), std::invalid_argument);
  }
}

TEST_CASE("bump-perturbed generator") {
  const double gamma = 1.5;

  SECTION("tau all zeros gives the reference quadratic") {
    Domain cube = Domain::unit_cube(2);
    std::vector<int> tau(bump_cell_count(cube, 0.5), 0);
    RealFunction f = make_bump_perturbed(cube, 0.5, tau, gamma);
    const double w2 = cube.width() * cube.width();
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
      Eigen::VectorXd x(2);
      x << rng.uniform01(), rng.uniform01();
      REQUIRE(f(x) == Catch::Approx(gamma / w2 * x.squaredNorm()));
    }
  }

  SECTION("d=1 full-interval bump at the midpoint") {
    Domain interval = Domain::interval(0.0, 1.0);
    REQUIRE(bump_cell_count(interval, 1.0) == 1);
    RealFunction f = make_bump_perturbed(interval, 1.0, {1}, gamma);
    // w = 1, the inscribed interval is [0,1]: value gamma (0.25 - sin^3(pi/2)/20)
    REQUIRE(f(vec1(0.5)) == Catch::Approx(gamma * (0.25 - 1.0 / 20.0)));
  }

  SECTION("tau length mismatch") {
    Domain interval = Domain::interval(0.0, 1.0);
    REQUIRE_THROWS_AS(make_bump_perturbed(interval, 0.5, {1}, gamma), std::invalid_argument);
  }

  SECTION("convexity spot check with all bumps on") {
    Domain cube = Domain::unit_cube(2);
    std::vector<int> tau(bump_cell_count(cube, 0.25), 1);
    RealFunction f = make_bump_perturbed(cube, 0.25, tau, gamma);
    REQUIRE(convexity_spot_check(f, cube, 1000, 77));
  }

  SECTION("bump vanishes outside its cell") {
    Domain interval = Domain::interval(0.0, 1.0);
    const int cells = bump_cell_count(interval, 0.25);
    REQUIRE(cells == 4);
    std::vector<int> tau(cells, 0);
    tau[0] = 1;
    RealFunction f = make_bump_perturbed(interval, 0.25, tau, gamma);
    RealFunction ref = make_bump_perturbed(interval, 0.25, std::vector<int>(cells, 0), gamma);
    REQUIRE(f(vec1(0.9)) == Catch::Approx(ref(vec1(0.9))));
    REQUIRE(f(vec1(0.1)) < ref(vec1(0.1)));
  }
}

TEST_CASE("cap-perturbed generator") {
  Domain ball = Domain::ball(Eigen::VectorXd::Zero(2), 1.0);
  const double eta = 0.2;
  const double gamma = 2.0;
  auto caps = disjoint_caps(ball, eta, 6, 9);
  REQUIRE(caps.size() >= 3);

  SECTION("tau all zeros is the zero function") {
    std::vector<int> tau(caps.size(), 0);
    RealFunction f = make_cap_perturbed(ball, caps, tau, gamma);
    Rng rng(1);
    for (int i = 0; i < 20; ++i) REQUIRE(f(rng.unit_vector(2) * rng.uniform01()) == 0.0);
  }

  SECTION("apex attains gamma") {
    std::vector<int> tau(caps.size(), 0);
    tau[0] = 1;
    RealFunction f = make_cap_perturbed(ball, caps, tau, gamma);
    REQUIRE(f(caps[0].normal * 1.0) == Catch::Approx(gamma));
  }

  SECTION("zero outside all caps") {
    std::vector<int> tau(caps.size(), 1);
    RealFunction f = make_cap_perturbed(ball, caps, tau, gamma);
    REQUIRE(f(Eigen::VectorXd::Zero(2)) == 0.0);
  }

  SECTION("tau length mismatch") {
    REQUIRE_THROWS_AS(make_cap_perturbed(ball, caps, {1}, gamma), std::invalid_argument);
  }

  SECTION("l2 distance scales linearly in the Hamming distance") {
    // brute-force per-cap integral of h_i^2 over the ball on a polar grid
    std::vector<double> cap_integral;
    for (const auto& cap : caps) {
      double acc = 0.0;
      const int nr = 400, nt = 1600;
      for (int ir = 0; ir < nr; ++ir) {
        const double r = (ir + 0.5) / nr;
        for (int it = 0; it < nt; ++it) {
          const double th = 2.0 * std::numbers::pi * (it + 0.5) / nt;
          Eigen::VectorXd x(2);
          x << r * std::cos(th), r * std::sin(th);
          const double slack = x.dot(cap.normal) - cap.offset;
          if (slack > 0.0) {
            const double h = gamma * slack / cap.height;
            acc += h * h * r;
          }
        }
      }
      cap_integral.push_back(acc * (1.0 / nr) * (2.0 * std::numbers::pi / nt) / std::numbers::pi);
    }
    const double c_min = *std::min_element(cap_integral.begin(), cap_integral.end());
    const double c_max = *std::max_element(cap_integral.begin(), cap_integral.end());

    Rng rng(123);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<int> tau(caps.size()), tau2(caps.size());
      int hamming = 0;
      for (std::size_t i = 0; i < caps.size(); ++i) {
        tau[i] = rng.uniform_int(2);
        tau2[i] = rng.uniform_int(2);
        hamming += tau[i] != tau2[i] ? 1 : 0;
      }
      if (hamming == 0) continue;
      RealFunction f = make_cap_perturbed(ball, caps, tau, gamma);
      RealFunction g = make_cap_perturbed(ball, caps, tau2, gamma);
      const double d2 = l2_nu_sq(f, g, ball, 400000, 1000 + trial);
      REQUIRE(d2 >= 0.85 * hamming * c_min);
      REQUIRE(d2 <= 1.15 * hamming * c_max);
    }
  }
}
