#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cvxreg/rng.hpp"

namespace cvxreg {

/// Spherical cap {x : x . normal >= offset} of a ball, of the given height.
struct Cap {
  Eigen::VectorXd normal;  // unit vector
  double offset = 0.0;
  double height = 0.0;
};

struct DomainOptions {
  int disjointness_samples = 32;  // random interior points per simplex pair
  double tol = 1e-9;
};

/// Support of the regression model: either a polytope given by a simplicial
/// decomposition, or a Euclidean ball. Immutable after construction.
class Domain {
 public:
  enum class Kind { Polytope, Ball };

  static Domain polytope(std::vector<Eigen::VectorXd> vertices,
                         std::vector<std::vector<int>> simplices,
                         const DomainOptions& opts = {}) {
    Domain dom;
    dom.kind_ = Kind::Polytope;
    dom.vertices_ = std::move(vertices);
    dom.simplices_ = std::move(simplices);
    dom.validate_polytope(opts);
    dom.compute_simplex_volumes();
    return dom;
  }

  static Domain ball(Eigen::VectorXd center, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("Domain::ball: radius must be positive");
    Domain dom;
    dom.kind_ = Kind::Ball;
    dom.center_ = std::move(center);
    dom.radius_ = radius;
    return dom;
  }

  /// [a, b] in dimension 1.
  static Domain interval(double a, double b) {
    Eigen::VectorXd va(1), vb(1);
    va << a;
    vb << b;
    return polytope({va, vb}, {{0, 1}});
  }

  /// Unit hypercube [0,1]^d, Kuhn-triangulated into d! simplices.
  static Domain unit_cube(int d) {
    if (d < 1) throw std::invalid_argument("Domain::unit_cube: d must be >= 1");
    std::vector<Eigen::VectorXd> verts;
    verts.reserve(std::size_t{1} << d);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      Eigen::VectorXd v(d);
      for (int j = 0; j < d; ++j) v[j] = (mask >> j) & 1 ? 1.0 : 0.0;
      verts.push_back(std::move(v));
    }
    std::vector<int> perm(d);
    for (int j = 0; j < d; ++j) perm[j] = j;
    std::vector<std::vector<int>> simplices;
    do {
      std::vector<int> s;
      std::uint64_t mask = 0;
      s.push_back(0);
      for (int j = 0; j < d; ++j) {
        mask |= std::uint64_t{1} << perm[j];
        s.push_back(static_cast<int>(mask));
      }
      simplices.push_back(std::move(s));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return polytope(std::move(verts), std::move(simplices));
  }

  Kind kind() const { return kind_; }
  bool is_ball() const { return kind_ == Kind::Ball; }
  bool is_polytope() const { return kind_ == Kind::Polytope; }

  int dim() const {
    return kind_ == Kind::Ball ? static_cast<int>(center_.size())
                               : static_cast<int>(vertices_.front().size());
  }

  const std::vector<Eigen::VectorXd>& vertices() const { return vertices_; }
  const std::vector<std::vector<int>>& simplices() const { return simplices_; }
  const Eigen::VectorXd& center() const { return center_; }
  double radius() const { return radius_; }

  /// w(dom) = sup over point pairs of the Euclidean distance.
  double width() const {
    if (kind_ == Kind::Ball) return 2.0 * radius_;
    double w = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
      for (std::size_t j = i + 1; j < vertices_.size(); ++j)
        w = std::max(w, (vertices_[i] - vertices_[j]).norm());
    return w;
  }

  double volume() const {
    if (kind_ == Kind::Ball) {
      const double d = dim();
      return std::pow(std::numbers::pi, d / 2.0) * std::pow(radius_, d) /
             std::tgamma(d / 2.0 + 1.0);
    }
    double v = 0.0;
    for (double sv : simplex_volumes_) v += sv;
    return v;
  }

  double simplex_volume(int i) const { return simplex_volumes_.at(i); }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const {
    if (kind_ == Kind::Ball) return (x - center_).norm() <= radius_ * (1.0 + tol) + tol;
    for (std::size_t s = 0; s < simplices_.size(); ++s) {
      if (barycentric_min(s, x) >= -tol) return true;
    }
    return false;
  }

  /// Smallest barycentric coordinate of x in simplex s (>= 0 means inside).
  double barycentric_min(std::size_t s, const Eigen::VectorXd& x) const {
    const auto& idx = simplices_[s];
    const int d = dim();
    Eigen::MatrixXd edges(d, d);
    for (int j = 0; j < d; ++j) edges.col(j) = vertices_[idx[j + 1]] - vertices_[idx[0]];
    Eigen::VectorXd lambda = edges.partialPivLu().solve(x - vertices_[idx[0]]);
    double mn = 1.0 - lambda.sum();
    for (int j = 0; j < d; ++j) mn = std::min(mn, lambda[j]);
    return mn;
  }

  /// Uniform point inside simplex s via sorted-exponential barycentric weights.
  Eigen::VectorXd sample_in_simplex(std::size_t s, Rng& rng) const {
    const auto& idx = simplices_[s];
    const int d = dim();
    Eigen::VectorXd w(d + 1);
    double total = 0.0;
    for (int j = 0; j <= d; ++j) {
      w[j] = rng.exponential();
      total += w[j];
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    for (int j = 0; j <= d; ++j) x += (w[j] / total) * vertices_[idx[j]];
    return x;
  }

  /// Quasi-uniform points on the boundary: polytope vertices, or a
  /// deterministic discretization of the sphere (count points).
  std::vector<Eigen::VectorXd> boundary_points(int count = 0) const {
    if (kind_ == Kind::Polytope) return vertices_;
    const int d = dim();
    if (count <= 0) count = 64 * d;
    std::vector<Eigen::VectorXd> pts;
    if (d == 1) {
      Eigen::VectorXd a(1), b(1);
      a << center_[0] - radius_;
      b << center_[0] + radius_;
      return {a, b};
    }
    if (d == 2) {
      pts.reserve(count);
      for (int i = 0; i < count; ++i) {
        const double th = 2.0 * std::numbers::pi * i / count;
        Eigen::VectorXd p(2);
        p << center_[0] + radius_ * std::cos(th), center_[1] + radius_ * std::sin(th);
        pts.push_back(std::move(p));
      }
      return pts;
    }
    Rng rng = Rng::stream(0x5f3759df, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(count)});
    pts.reserve(count);
    for (int i = 0; i < count; ++i) pts.push_back(center_ + radius_ * rng.unit_vector(d));
    return pts;
  }

 private:
  Domain() = default;

  void validate_polytope(const DomainOptions& opts) {
    if (vertices_.empty() || simplices_.empty())
      throw std::invalid_argument("Domain: polytope needs vertices and simplices");
    const int d = static_cast<int>(vertices_.front().size());
    for (const auto& v : vertices_)
      if (v.size() != d) throw std::invalid_argument("Domain: inconsistent vertex dimension");
    for (const auto& s : simplices_) {
      if (static_cast<int>(s.size()) != d + 1)
        throw std::invalid_argument("Domain: each simplex needs d+1 vertex indices");
      for (int i : s)
        if (i < 0 || i >= static_cast<int>(vertices_.size()))
          throw std::invalid_argument("Domain: simplex vertex index out of range");
      Eigen::MatrixXd edges(d, d);
      for (int j = 0; j < d; ++j) edges.col(j) = vertices_[s[j + 1]] - vertices_[s[0]];
      if (std::abs(edges.determinant()) < 1e-14)
        throw std::invalid_argument("Domain: degenerate simplex in decomposition");
    }
    // probabilistic disjoint-interior check on random interior points
    Rng rng = Rng::stream(0x0ddba11, {simplices_.size(), vertices_.size()});
    compute_simplex_volumes();
    for (std::size_t a = 0; a < simplices_.size(); ++a) {
      for (int k = 0; k < opts.disjointness_samples; ++k) {
        Eigen::VectorXd x = sample_in_simplex(a, rng);
        for (std::size_t b = 0; b < simplices_.size(); ++b) {
          if (a == b) continue;
          if (barycentric_min(b, x) > opts.tol)
            throw std::invalid_argument("Domain: simplex interiors overlap");
        }
      }
    }
  }

  void compute_simplex_volumes() {
    const int d = dim();
    double fact = 1.0;
    for (int j = 2; j <= d; ++j) fact *= j;
    simplex_volumes_.clear();
    for (const auto& s : simplices_) {
      Eigen::MatrixXd edges(d, d);
      for (int j = 0; j < d; ++j) edges.col(j) = vertices_[s[j + 1]] - vertices_[s[0]];
      simplex_volumes_.push_back(std::abs(edges.determinant()) / fact);
    }
  }

  Kind kind_ = Kind::Ball;
  std::vector<Eigen::VectorXd> vertices_;
  std::vector<std::vector<int>> simplices_;
  std::vector<double> simplex_volumes_;
  Eigen::VectorXd center_;
  double radius_ = 0.0;
};

inline double domain_width(const Domain& dom) { return dom.width(); }

/// Density hook for the design measure; only the uniform law is implemented.
using DesignDensity = std::function<double(const Eigen::VectorXd&)>;

/// n i.i.d. uniform draws from the domain, deterministic given the seed.
inline std::vector<Eigen::VectorXd> sample_design(const Domain& dom, int n, std::uint64_t seed,
                                                  const DesignDensity& density = {}) {
  if (n < 1) throw std::invalid_argument("sample_design: n must be >= 1");
  if (density)
    throw std::invalid_argument("sample_design: only the uniform design density is implemented");
  Rng rng = Rng::stream(seed, {0xde519});
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(n);
  if (dom.is_ball()) {
    const int d = dom.dim();
    for (int i = 0; i < n; ++i) {
      const double u = std::pow(rng.uniform01(), 1.0 / d);
      pts.push_back(dom.center() + dom.radius() * u * rng.unit_vector(d));
    }
    return pts;
  }
  // choose a simplex with probability proportional to volume, then a uniform
  // point inside it; exact and rejection-free
  const auto& simplices = dom.simplices();
  std::vector<double> cum(simplices.size());
  double total = 0.0;
  for (std::size_t s = 0; s < simplices.size(); ++s) {
    total += dom.simplex_volume(static_cast<int>(s));
    cum[s] = total;
  }
  if (total <= 0.0) throw std::runtime_error("sample_design: degenerate polytope");
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01() * total;
    std::size_t s = 0;
    while (s + 1 < cum.size() && cum[s] < u) ++s;
    pts.push_back(dom.sample_in_simplex(s, rng));
  }
  return pts;
}

/// Greedy packing of spherical caps of height eta whose base disks are
/// pairwise disjoint; the count is capped at max_caps.
inline std::vector<Cap> disjoint_caps(const Domain& dom, double eta, int max_caps,
                                      std::uint64_t seed) {
  if (!dom.is_ball()) throw std::invalid_argument("disjoint_caps: domain must be a ball");
  const double r = dom.radius();
  if (!(eta > 0.0) || eta >= r)
    throw std::invalid_argument("disjoint_caps: need 0 < eta < radius");
  if (max_caps < 1) return {};
  const int d = dom.dim();
  // angular radius of the cap's base disk; disjoint iff normals separated by > 2 theta
  const double theta = std::acos((r - eta) / r);

  std::vector<Eigen::VectorXd> accepted;
  auto try_accept = [&](const Eigen::VectorXd& u) {
    for (const auto& v : accepted) {
      const double c = std::clamp(u.dot(v), -1.0, 1.0);
      if (std::acos(c) <= 2.0 * theta) return false;
    }
    accepted.push_back(u);
    return true;
  };

  if (d == 1) {
    Eigen::VectorXd e(1);
    e << 1.0;
    try_accept(e);
    if (static_cast<int>(accepted.size()) < max_caps) try_accept(-e);
  } else if (d == 2) {
    // equiangular sweep is optimal on the circle
    const int grid = std::max(4096, 8 * max_caps);
    for (int i = 0; i < grid && static_cast<int>(accepted.size()) < max_caps; ++i) {
      const double th = 2.0 * std::numbers::pi * i / grid;
      Eigen::VectorXd u(2);
      u << std::cos(th), std::sin(th);
      try_accept(u);
    }
  } else {
    Rng rng = Rng::stream(seed, {0xca95, static_cast<std::uint64_t>(d)});
    const int candidates = std::max(8192, 64 * max_caps);
    for (int i = 0; i < candidates && static_cast<int>(accepted.size()) < max_caps; ++i)
      try_accept(rng.unit_vector(d));
  }

  std::vector<Cap> caps;
  caps.reserve(accepted.size());
  for (const auto& u : accepted)
    caps.push_back(Cap{u, dom.center().dot(u) + (r - eta), eta});
  return caps;
}

}  // namespace cvxreg
