#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "cvxreg/geometry.hpp"
#include "cvxreg/rng.hpp"

namespace cvxreg {

struct AffinePiece {
  Eigen::VectorXd a;
  double b = 0.0;
};

/// Polyhedral convex function f(x) = max_i (a_i . x + b_i). The universal
/// representation for fitted estimators.
class MaxAffine {
 public:
  explicit MaxAffine(std::vector<AffinePiece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw std::invalid_argument("MaxAffine: needs at least one piece");
    const auto d = pieces_.front().a.size();
    for (const auto& p : pieces_)
      if (p.a.size() != d) throw std::invalid_argument("MaxAffine: inconsistent piece dimension");
  }

  double operator()(const Eigen::VectorXd& x) const {
    if (x.size() != dim())
      throw std::invalid_argument("MaxAffine: evaluation point has wrong dimension");
    double best = pieces_.front().a.dot(x) + pieces_.front().b;
    for (std::size_t i = 1; i < pieces_.size(); ++i)
      best = std::max(best, pieces_[i].a.dot(x) + pieces_[i].b);
    return best;
  }

  int dim() const { return static_cast<int>(pieces_.front().a.size()); }
  int size() const { return static_cast<int>(pieces_.size()); }
  const std::vector<AffinePiece>& pieces() const { return pieces_; }

  /// Lipschitz constant of the max-affine form: max_i ||a_i||_2.
  double lipschitz() const {
    double L = 0.0;
    for (const auto& p : pieces_) L = std::max(L, p.a.norm());
    return L;
  }

 private:
  std::vector<AffinePiece> pieces_;
};

inline double eval_max_affine(const MaxAffine& f, const Eigen::VectorXd& x) { return f(x); }

/// f(x) = x^T Q x + c . x + r with Q positive semidefinite.
struct Quadratic {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  double r = 0.0;

  Quadratic(Eigen::MatrixXd Q_, Eigen::VectorXd c_, double r_)
      : Q(std::move(Q_)), c(std::move(c_)), r(r_) {
    if (Q.rows() != Q.cols() || Q.rows() != c.size())
      throw std::invalid_argument("Quadratic: inconsistent dimensions");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Q + Q.transpose()));
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw std::invalid_argument("Quadratic: Q must be positive semidefinite");
  }

  double operator()(const Eigen::VectorXd& x) const { return x.dot(Q * x) + c.dot(x) + r; }
};

namespace detail {

// reference bump g0(x) = (1/20d) sum_i sin^3(pi x_i) on [0,1]^d; its Hessian is
// diagonal with entries bounded by 1
inline double bump_g0(const Eigen::VectorXd& t) {
  double s = 0.0;
  for (int i = 0; i < t.size(); ++i) {
    const double v = std::sin(std::numbers::pi * t[i]);
    s += v * v * v;
  }
  return s / (20.0 * t.size());
}

struct BumpPerturbed {
  double gamma = 1.0;
  double width_sq = 1.0;
  double eps = 1.0;
  int cells_per_axis = 1;
  // one inscribed axis-aligned cube per simplex: lower corner and side
  std::vector<Eigen::VectorXd> cube_lo;
  std::vector<double> cube_side;
  std::vector<int> tau;  // one bit per (simplex, cell) in lexicographic order

  double operator()(const Eigen::VectorXd& x) const {
    const int d = static_cast<int>(x.size());
    double bump = 0.0;
    const int k = cells_per_axis;
    int cells_per_simplex = 1;
    for (int j = 0; j < d; ++j) cells_per_simplex *= k;
    for (std::size_t s = 0; s < cube_lo.size(); ++s) {
      const double side = cube_side[s];
      if (side <= 0.0) continue;
      Eigen::VectorXd z = (x - cube_lo[s]) / side;
      bool inside = true;
      int cell = 0;
      Eigen::VectorXd local(d);
      for (int j = 0; j < d && inside; ++j) {
        if (z[j] < 0.0 || z[j] > 1.0) {
          inside = false;
          break;
        }
        int ij = static_cast<int>(std::floor(z[j] / eps));
        if (ij >= k) ij = k - 1;
        local[j] = (z[j] - ij * eps) / eps;
        if (local[j] < 0.0 || local[j] > 1.0) inside = false;
        cell = cell * k + ij;
      }
      if (!inside) continue;
      const int flat = static_cast<int>(s) * cells_per_simplex + cell;
      if (tau[flat]) bump += side * side * eps * eps * bump_g0(local);
      break;  // cubes live in disjoint simplices
    }
    return gamma / width_sq * (x.squaredNorm() - bump);
  }
};

struct CapPerturbed {
  double gamma = 1.0;
  std::vector<Cap> caps;
  std::vector<int> tau;

  double operator()(const Eigen::VectorXd& x) const {
    double v = 0.0;
    for (std::size_t i = 0; i < caps.size(); ++i) {
      if (!tau[i]) continue;
      const double slack = x.dot(caps[i].normal) - caps[i].offset;
      if (slack > 0.0) v += gamma * slack / caps[i].height;
    }
    return v;
  }
};

}  // namespace detail

/// Type-erased regression function: the truth f_0 of the model, a fitted
/// estimator, or one of the least-favorable generators.
class RealFunction {
 public:
  using Custom = std::function<double(const Eigen::VectorXd&)>;

  RealFunction(MaxAffine f) : impl_(std::move(f)) {}        // NOLINT(google-explicit-constructor)
  RealFunction(Quadratic f) : impl_(std::move(f)) {}        // NOLINT(google-explicit-constructor)
  RealFunction(detail::BumpPerturbed f) : impl_(std::move(f)) {}  // NOLINT
  RealFunction(detail::CapPerturbed f) : impl_(std::move(f)) {}   // NOLINT

  static RealFunction custom(Custom fn) { return RealFunction(std::move(fn)); }
  static RealFunction zero() {
    return custom([](const Eigen::VectorXd&) { return 0.0; });
  }

  double operator()(const Eigen::VectorXd& x) const {
    return std::visit([&](const auto& f) -> double { return f(x); }, impl_);
  }

  const MaxAffine* as_max_affine() const { return std::get_if<MaxAffine>(&impl_); }

 private:
  explicit RealFunction(Custom fn) : impl_(std::move(fn)) {
    if (!std::get<Custom>(impl_))
      throw std::invalid_argument("RealFunction: empty callback");
  }

  std::variant<MaxAffine, Quadratic, detail::BumpPerturbed, detail::CapPerturbed, Custom> impl_;
};

/// Discrete squared norm l^2_{X^n}(f, g) from function values at the design.
inline double l2_disc_sq(const Eigen::VectorXd& f_vals, const Eigen::VectorXd& g_vals) {
  if (f_vals.size() != g_vals.size())
    throw std::invalid_argument("l2_disc_sq: length mismatch");
  if (f_vals.size() == 0) return 0.0;
  return (f_vals - g_vals).squaredNorm() / static_cast<double>(f_vals.size());
}

/// Monte Carlo estimate of the continuous squared norm on a shared quadrature
/// sample. Sharing the sample across estimators makes comparisons exact in the
/// common-random-numbers sense.
inline double l2_nu_sq(const RealFunction& f, const RealFunction& g,
                       const std::vector<Eigen::VectorXd>& quad_points) {
  if (quad_points.empty()) throw std::invalid_argument("l2_nu_sq: empty quadrature sample");
  double s = 0.0;
  for (const auto& z : quad_points) {
    const double d = f(z) - g(z);
    s += d * d;
  }
  return s / static_cast<double>(quad_points.size());
}

inline double l2_nu_sq(const RealFunction& f, const RealFunction& g, const Domain& dom,
                       int quad_n, std::uint64_t seed) {
  return l2_nu_sq(f, g, sample_design(dom, quad_n, seed));
}

/// Number of bump cells for the given cell size; tau vectors must have this
/// length.
inline int bump_cell_count(const Domain& dom, double eps) {
  if (!dom.is_polytope()) throw std::invalid_argument("bump_cell_count: domain must be a polytope");
  if (!(eps > 0.0) || eps > 1.0) throw std::invalid_argument("bump_cell_count: need 0 < eps <= 1");
  const int d = dom.dim();
  const int k = static_cast<int>(std::floor(1.0 / eps + 1e-12));
  int cells = 1;
  for (int j = 0; j < d; ++j) cells *= k;
  return static_cast<int>(dom.simplices().size()) * cells;
}

namespace detail {

// largest axis-aligned cube centered at the simplex centroid, by bisection on
// the side length
inline std::pair<Eigen::VectorXd, double> inscribed_cube(const Domain& dom, std::size_t s) {
  const int d = dom.dim();
  const auto& idx = dom.simplices()[s];
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
  for (int j = 0; j <= d; ++j) centroid += dom.vertices()[idx[j]];
  centroid /= (d + 1.0);

  auto fits = [&](double side) {
    const double h = side / 2.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      Eigen::VectorXd corner = centroid;
      for (int j = 0; j < d; ++j) corner[j] += ((mask >> j) & 1 ? h : -h);
      if (dom.barycentric_min(s, corner) < 0.0) return false;
    }
    return true;
  };

  double lo = 0.0, hi = dom.width();
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (fits(mid))
      lo = mid;
    else
      hi = mid;
  }
  return {centroid - Eigen::VectorXd::Constant(d, lo / 2.0), lo};
}

}  // namespace detail

/// Least-favorable generator for polytopal supports: f_tau = (Gamma / w^2)
/// (|x|^2 - sum of selected per-cell bumps). Convex for any tau since each
/// bump's Hessian entries are bounded by 1.
inline RealFunction make_bump_perturbed(const Domain& dom, double eps, const std::vector<int>& tau,
                                        double gamma) {
  const int expected = bump_cell_count(dom, eps);
  if (static_cast<int>(tau.size()) != expected)
    throw std::invalid_argument("make_bump_perturbed: tau length must equal bump_cell_count");
  detail::BumpPerturbed f;
  f.gamma = gamma;
  const double w = dom.width();
  f.width_sq = w * w;
  f.eps = eps;
  f.cells_per_axis = static_cast<int>(std::floor(1.0 / eps + 1e-12));
  f.tau = tau;
  for (std::size_t s = 0; s < dom.simplices().size(); ++s) {
    auto [lo, side] = detail::inscribed_cube(dom, s);
    f.cube_lo.push_back(std::move(lo));
    f.cube_side.push_back(side);
  }
  return RealFunction(std::move(f));
}

/// Least-favorable generator for smooth supports: f_tau = sum over selected
/// caps of h_i, where h_i is nonnegative affine on its cap, zero elsewhere,
/// and bounded by Gamma.
inline RealFunction make_cap_perturbed(const Domain& dom, const std::vector<Cap>& caps,
                                       const std::vector<int>& tau, double gamma) {
  if (!dom.is_ball()) throw std::invalid_argument("make_cap_perturbed: domain must be a ball");
  if (tau.size() != caps.size())
    throw std::invalid_argument("make_cap_perturbed: tau length must equal cap count");
  detail::CapPerturbed f;
  f.gamma = gamma;
  f.caps = caps;
  f.tau = tau;
  return RealFunction(std::move(f));
}

/// Randomized midpoint convexity check: f(l x + (1-l) y) <= l f(x) + (1-l)
/// f(y) on random triples from the domain.
inline bool convexity_spot_check(const RealFunction& f, const Domain& dom, int triples,
                                 std::uint64_t seed, double tol = 1e-9) {
  auto pts = sample_design(dom, 2 * triples, seed);
  Rng rng = Rng::stream(seed, {0xc0feee});
  for (int i = 0; i < triples; ++i) {
    const auto& x = pts[2 * i];
    const auto& y = pts[2 * i + 1];
    const double lam = rng.uniform01();
    const Eigen::VectorXd mid = lam * x + (1.0 - lam) * y;
    if (f(mid) > lam * f(x) + (1.0 - lam) * f(y) + tol) return false;
  }
  return true;
}

}  // namespace cvxreg
