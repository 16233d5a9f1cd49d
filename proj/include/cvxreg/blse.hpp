#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cvxreg/funcspace.hpp"
#include "cvxreg/geometry.hpp"
#include "cvxreg/qp.hpp"

namespace cvxreg {

/// Data and constraints for the bounded least-squares convex regression
/// program. gamma = infinity selects the unconstrained LSE.
struct BlseSpec {
  Eigen::MatrixXd design;  // n x d
  Eigen::VectorXd responses;
  double gamma = std::numeric_limits<double>::infinity();
  Domain dom;
  // boundary vertices v_l for the sup constraint; auto-filled from the
  // polytope vertices or a discretized sphere when empty
  std::vector<Eigen::VectorXd> boundary_points;
  int boundary_count = 0;  // sphere discretization size; 0 means 64*d

  BlseSpec(Eigen::MatrixXd design_, Eigen::VectorXd responses_, double gamma_, Domain dom_)
      : design(std::move(design_)), responses(std::move(responses_)), gamma(gamma_),
        dom(std::move(dom_)) {
    if (design.rows() < 1 || design.rows() != responses.size())
      throw std::invalid_argument("BlseSpec: design/response size mismatch");
    if (!(gamma > 0.0)) throw std::invalid_argument("BlseSpec: gamma must be positive");
    if (design.cols() != dom.dim())
      throw std::invalid_argument("BlseSpec: design dimension does not match the domain");
  }

  std::vector<Eigen::VectorXd> effective_boundary() const {
    if (!boundary_points.empty()) return boundary_points;
    return dom.boundary_points(boundary_count);
  }
};

struct BlseFit {
  Eigen::VectorXd y_hat;   // fitted values at the original design rows
  Eigen::MatrixXd g_hat;   // subgradients at the original design rows
  MaxAffine estimator;     // canonical max-affine extension
  QpSolution solver;
  double sse = 0.0;        // sum of squared residuals on the original data
};

namespace detail {

struct MergedSites {
  Eigen::MatrixXd points;   // s x d distinct design sites
  Eigen::VectorXd means;    // weighted mean response per site
  Eigen::VectorXd weights;  // multiplicities
  std::vector<int> site_of;  // original row -> site index
};

// duplicated design rows make the convexity constraints degenerate; merge
// them with multiplicity weights in the objective
inline MergedSites merge_duplicates(const Eigen::MatrixXd& design,
                                    const Eigen::VectorXd& responses) {
  const int n = static_cast<int>(design.rows());
  MergedSites m;
  m.site_of.assign(n, -1);
  std::vector<int> first;
  for (int i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < first.size(); ++s) {
      if ((design.row(i) - design.row(first[s])).norm() <= 1e-13) {
        m.site_of[i] = static_cast<int>(s);
        break;
      }
    }
    if (m.site_of[i] < 0) {
      m.site_of[i] = static_cast<int>(first.size());
      first.push_back(i);
    }
  }
  const int s = static_cast<int>(first.size());
  m.points.resize(s, design.cols());
  m.means = Eigen::VectorXd::Zero(s);
  m.weights = Eigen::VectorXd::Zero(s);
  for (int i = 0; i < n; ++i) {
    m.weights[m.site_of[i]] += 1.0;
    m.means[m.site_of[i]] += responses[i];
  }
  for (int j = 0; j < s; ++j) {
    m.points.row(j) = design.row(first[j]);
    m.means[j] /= m.weights[j];
  }
  return m;
}

}  // namespace detail

/// Translate the program to QP standard form. Variables are
/// (y_1..y_s, g_1..g_s) for the s merged design sites; constraints are the
/// s(s-1) convexity couplings plus, for finite gamma, the |y_i| box and the
/// boundary rows y_i + g_i^T (v_l - X_i) <= gamma.
inline QpProblem build_blse_qp(const BlseSpec& spec) {
  const int d = static_cast<int>(spec.design.cols());
  for (int i = 0; i < spec.design.rows(); ++i) {
    if (!spec.dom.contains(spec.design.row(i).transpose(), 1e-7))
      throw std::invalid_argument("build_blse_qp: design point outside the domain");
  }
  const auto sites = detail::merge_duplicates(spec.design, spec.responses);
  const int s = static_cast<int>(sites.points.rows());
  const bool bounded = std::isfinite(spec.gamma);
  const auto boundary = bounded ? spec.effective_boundary() : std::vector<Eigen::VectorXd>{};
  const int k = static_cast<int>(boundary.size());

  const int n_vars = s * (1 + d);
  const int rows_cvx = s * (s - 1);
  const int n_rows = rows_cvx + (bounded ? s + s * k : 0);
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<Eigen::Triplet<double>> p_t, a_t;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n_vars);
  for (int i = 0; i < s; ++i) {
    p_t.emplace_back(i, i, 2.0 * sites.weights[i]);
    q[i] = -2.0 * sites.weights[i] * sites.means[i];
  }
  // tiny ridge on the subgradient block: keeps the KKT system well posed and
  // selects small-norm subgradients among the QP optima
  for (int i = 0; i < s * d; ++i) p_t.emplace_back(s + i, s + i, 2e-10);

  Eigen::VectorXd lower(n_rows), upper(n_rows);
  int row = 0;
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      if (i == j) continue;
      // y_j - y_i - g_i^T (X_j - X_i) >= 0
      a_t.emplace_back(row, j, 1.0);
      a_t.emplace_back(row, i, -1.0);
      for (int c = 0; c < d; ++c)
        a_t.emplace_back(row, s + i * d + c, -(sites.points(j, c) - sites.points(i, c)));
      lower[row] = 0.0;
      upper[row] = inf;
      ++row;
    }
  }
  if (bounded) {
    for (int i = 0; i < s; ++i) {
      a_t.emplace_back(row, i, 1.0);
      lower[row] = -spec.gamma;
      upper[row] = spec.gamma;
      ++row;
    }
    for (int i = 0; i < s; ++i) {
      for (int l = 0; l < k; ++l) {
        a_t.emplace_back(row, i, 1.0);
        for (int c = 0; c < d; ++c)
          a_t.emplace_back(row, s + i * d + c, boundary[l][c] - sites.points(i, c));
        lower[row] = -inf;
        upper[row] = spec.gamma;
        ++row;
      }
    }
  }
  return QpProblem::from_triplets(n_vars, n_rows, p_t, std::move(q), a_t, std::move(lower),
                                  std::move(upper));
}

/// Solve the program and assemble the canonical max-affine estimator
/// max_i (y_i + g_i^T (x - X_i)); fitted values interpolate within 10 tol.
inline BlseFit fit_blse(const BlseSpec& spec, double tol = 1e-6, const QpSettings& base = {}) {
  const auto sites = detail::merge_duplicates(spec.design, spec.responses);
  const int s = static_cast<int>(sites.points.rows());
  const int d = static_cast<int>(spec.design.cols());
  QpProblem qp = build_blse_qp(spec);
  QpSettings st = base;
  st.tol = tol;
  QpSolution qsol = qp_solve(qp, st);
  if (qsol.status == QpStatus::Infeasible)
    throw std::runtime_error("fit_blse: QP reported infeasible (inconsistent constraints)");

  Eigen::VectorXd y_sites = qsol.x.head(s);
  std::vector<AffinePiece> pieces;
  pieces.reserve(s);
  for (int i = 0; i < s; ++i) {
    AffinePiece p;
    p.a = qsol.x.segment(s + i * d, d);
    p.b = y_sites[i] - p.a.dot(sites.points.row(i));
    pieces.push_back(std::move(p));
  }

  const int n = static_cast<int>(spec.design.rows());
  BlseFit fit{Eigen::VectorXd(n), Eigen::MatrixXd(n, d), MaxAffine(std::move(pieces)), qsol, 0.0};
  for (int i = 0; i < n; ++i) {
    const int si = sites.site_of[i];
    fit.y_hat[i] = y_sites[si];
    fit.g_hat.row(i) = qsol.x.segment(s + si * d, d).transpose();
    const double r = spec.responses[i] - fit.y_hat[i];
    fit.sse += r * r;
  }
  return fit;
}

/// The fixed d=1 scenario showing that the unconstrained LSE misbehaves near
/// the boundary: X1 = 0.4, X2 = 0.6, four points in (3/4, 1], Y = (1, -1,
/// ..., -1). The LSE interpolates and equals (2x - X1 - X2) / (X1 - X2) left
/// of X2; the fitted value at 0 is 5 while a gamma-bounded fit stays in
/// [-gamma, gamma].
struct CounterexampleResult {
  BlseFit fit;
  double x1 = 0.4, x2 = 0.6;
  // region where the closed form determines the estimator pointwise
  double closed_form_valid_until = 0.6;

  double closed_form(double x) const { return (2.0 * x - x1 - x2) / (x1 - x2); }
};

inline CounterexampleResult counterexample_lse_d1(double tol = 1e-9) {
  Eigen::MatrixXd x(6, 1);
  x << 0.4, 0.6, 0.8, 0.85, 0.9, 0.95;
  Eigen::VectorXd y(6);
  y << 1.0, -1.0, -1.0, -1.0, -1.0, -1.0;
  BlseSpec spec(x, y, std::numeric_limits<double>::infinity(), Domain::interval(0.0, 1.0));
  CounterexampleResult res{fit_blse(spec, tol)};
  return res;
}

}  // namespace cvxreg
