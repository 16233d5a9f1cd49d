#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numeric>

#include "cvxreg/blse.hpp"
#include "cvxreg/sieve.hpp"

using namespace cvxreg;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// brute force over contiguous two-block partitions of sorted 1-d points
double best_two_piece_sse(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(x.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return x(a, 0) < x(b, 0); });
  double best = kInf;
  for (int split = 2; split <= n - 2; ++split) {
    std::vector<int> left(order.begin(), order.begin() + split);
    std::vector<int> right(order.begin() + split, order.end());
    auto p1 = detail::fit_cell(x, y, left, false, 0.0);
    auto p2 = detail::fit_cell(x, y, right, false, 0.0);
    MaxAffine f({p1, p2});
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - f(x.row(i).transpose());
      sse += r * r;
    }
    best = std::min(best, sse);
  }
  return best;
}

double mean_sq(const MaxAffine& f, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (int i = 0; i < x.rows(); ++i) {
    const double r = y[i] - f(x.row(i).transpose());
    s += r * r;
  }
  return s / x.rows();
}

// one extra alternation round, mirroring the fitter's update
double one_more_round(const MaxAffine& f, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const SieveFitConfig& cfg) {
  const int n = static_cast<int>(x.rows());
  std::vector<std::vector<int>> cells(f.size());
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double bv = f.pieces()[0].a.dot(x.row(i)) + f.pieces()[0].b;
    for (int j = 1; j < f.size(); ++j) {
      const double v = f.pieces()[j].a.dot(x.row(i)) + f.pieces()[j].b;
      if (v > bv + 1e-15) {
        bv = v;
        best = j;
      }
    }
    cells[best].push_back(i);
  }
  std::vector<AffinePiece> pieces;
  for (const auto& cell : cells)
    if (!cell.empty()) pieces.push_back(detail::fit_cell(x, y, cell, cfg.fix_intercepts_zero,
                                                         cfg.ridge));
  return mean_sq(MaxAffine(pieces), x, y);
}

}  // namespace

TEST_CASE("recover |x| with two pieces") {
  Eigen::MatrixXd x(20, 1);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 10; ++i) {
    const double t = 0.1 * (i + 1);
    x(i, 0) = t;
    y[i] = t;
    x(10 + i, 0) = -t;
    y[10 + i] = t;
  }
  SieveFitConfig cfg;
  cfg.m = 2;
  cfg.seed = 42;
  MaxAffineFit fit = fit_max_affine_detailed(x, y, cfg);
  REQUIRE(fit.objective * 20 < 1e-16);
  REQUIRE(fit.model.size() == 2);
  double lo = fit.model.pieces()[0].a[0];
  double hi = fit.model.pieces()[1].a[0];
  if (lo > hi) std::swap(lo, hi);
  REQUIRE(lo == Catch::Approx(-1.0).margin(1e-8));
  REQUIRE(hi == Catch::Approx(1.0).margin(1e-8));
  // brute-force contiguous-partition oracle can do no better
  REQUIRE(fit.objective * 20 <= best_two_piece_sse(x, y) + 1e-12);
}

TEST_CASE("single piece equals ordinary least squares") {
  Rng rng(3);
  Eigen::MatrixXd x(30, 2);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    x.row(i) = rng.normal_vector(2).transpose();
    y[i] = 1.5 * x(i, 0) - 0.5 * x(i, 1) + 0.3 + 0.1 * rng.normal();
  }
  SieveFitConfig cfg;
  cfg.m = 1;
  MaxAffine f = fit_max_affine(x, y, cfg);
  // normal-equations oracle
  Eigen::MatrixXd z(30, 3);
  z << x, Eigen::VectorXd::Ones(30);
  Eigen::VectorXd beta = (z.transpose() * z).ldlt().solve(z.transpose() * y);
  REQUIRE(f.pieces()[0].a[0] == Catch::Approx(beta[0]).margin(1e-10));
  REQUIRE(f.pieces()[0].a[1] == Catch::Approx(beta[1]).margin(1e-10));
  REQUIRE(f.pieces()[0].b == Catch::Approx(beta[2]).margin(1e-10));
}

TEST_CASE("many pieces reach the unconstrained convex LSE residual") {
  Rng rng(8);
  const int n = 10;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = (i + 0.5) / n;
    y[i] = 4.0 * (x(i, 0) - 0.5) * (x(i, 0) - 0.5) + 0.2 * rng.normal();
  }
  BlseSpec spec(x, y, kInf, Domain::interval(0.0, 1.0));
  BlseFit blse = fit_blse(spec, 1e-9);

  SieveFitConfig cfg;
  cfg.m = n;
  cfg.restarts = 40;
  cfg.seed = 17;
  MaxAffineFit fit = fit_max_affine_detailed(x, y, cfg);
  REQUIRE(fit.objective * n <= blse.sse + 1e-6);
}

TEST_CASE("alternation bookkeeping") {
  Rng rng(21);
  const int n = 60;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform01() * 2.0 - 1.0;
    y[i] = std::max(std::abs(x(i, 0)), 0.4) + 0.05 * rng.normal();
  }
  SieveFitConfig cfg;
  cfg.m = 3;
  cfg.seed = 5;

  SECTION("objective nonincreasing across rounds") {
    MaxAffineFit fit = fit_max_affine_detailed(x, y, cfg);
    for (std::size_t r = 1; r < fit.round_objectives.size(); ++r)
      REQUIRE(fit.round_objectives[r] <= fit.round_objectives[r - 1] + 1e-15);
  }

  SECTION("piece count bounded by m and empty cells dropped") {
    MaxAffineFit fit = fit_max_affine_detailed(x, y, cfg);
    REQUIRE(fit.model.size() <= 3);
  }

  SECTION("one more alternation round does not improve the objective") {
    MaxAffineFit fit = fit_max_affine_detailed(x, y, cfg);
    const double again = one_more_round(fit.model, x, y, cfg);
    REQUIRE(std::abs(again - fit.objective) < 1e-10);
  }

  SECTION("empty input rejected") {
    Eigen::MatrixXd xe(0, 1);
    Eigen::VectorXd ye(0);
    REQUIRE_THROWS_AS(fit_max_affine(xe, ye, cfg), std::invalid_argument);
  }
}

TEST_CASE("zero intercepts stay exactly zero") {
  Rng rng(4);
  const int n = 40;
  Eigen::MatrixXd u(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    u.row(i) = rng.unit_vector(2).transpose();
    y[i] = std::max(u(i, 0), 0.5 * u(i, 1)) + 0.02 * rng.normal();
  }
  SieveFitConfig cfg;
  cfg.m = 3;
  cfg.fix_intercepts_zero = true;
  cfg.seed = 9;
  MaxAffine f = fit_max_affine(u, y, cfg);
  for (const auto& p : f.pieces()) REQUIRE(p.b == 0.0);
}

TEST_CASE("gamma clipping bounds the fitted values") {
  Rng rng(14);
  const int n = 50;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform01();
    y[i] = 5.0 * x(i, 0) + rng.normal() * 0.1;
  }
  SieveFitConfig cfg;
  cfg.m = 2;
  cfg.gamma = 2.0;
  cfg.seed = 2;
  MaxAffine f = fit_max_affine(x, y, cfg);
  for (int i = 0; i < n; ++i) REQUIRE(f(x.row(i).transpose()) <= 2.0 + 1e-12);
}

TEST_CASE("linear sieve projections") {
  SECTION("constant response gives a single coefficient") {
    Eigen::MatrixXd x(8, 1);
    for (int i = 0; i < 8; ++i) x(i, 0) = (i + 0.5) / 8.0;
    Eigen::VectorXd y = Eigen::VectorXd::Constant(8, 3.25);
    Eigen::VectorXd coef = fit_linear_sieve(x, y, 4);
    REQUIRE(coef[0] == Catch::Approx(3.25).margin(1e-10));
    for (int j = 1; j < 4; ++j) REQUIRE(coef[j] == Catch::Approx(0.0).margin(1e-10));
  }

  SECTION("m = n interpolates distinct full-rank designs") {
    Rng rng(6);
    const int n = 6;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = (i + 0.5) / n;
      y[i] = rng.normal();
    }
    Eigen::VectorXd coef = fit_linear_sieve(x, y, n);
    for (int i = 0; i < n; ++i)
      REQUIRE(eval_linear_sieve(coef, x(i, 0)) == Catch::Approx(y[i]).margin(1e-8));
  }

  SECTION("residual nonincreasing in m") {
    Rng rng(19);
    const int n = 40;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = rng.uniform01();
      y[i] = std::sin(3.0 * x(i, 0)) + 0.1 * rng.normal();
    }
    double prev = kInf;
    for (int m = 1; m <= 10; ++m) {
      Eigen::VectorXd coef = fit_linear_sieve(x, y, m);
      double rss = 0.0;
      for (int i = 0; i < n; ++i) {
        const double r = y[i] - eval_linear_sieve(coef, x(i, 0));
        rss += r * r;
      }
      REQUIRE(rss <= prev + 1e-9);
      prev = rss;
    }
  }

  SECTION("design outside [0,1] rejected") {
    Eigen::MatrixXd x(2, 1);
    x << 0.5, 1.5;
    REQUIRE_THROWS_AS(fit_linear_sieve(x, Eigen::VectorXd::Zero(2), 2), std::invalid_argument);
  }
}
