// Test-only independent oracles. These deliberately avoid the library's
// solution paths: dense brute-force enumeration and small closed forms.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cvxreg/qp.hpp"
#include "cvxreg/rng.hpp"

namespace oracles {

struct DenseQp {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd lower, upper;
};

inline DenseQp densify(const cvxreg::QpProblem& p) {
  DenseQp d;
  d.P = Eigen::MatrixXd(p.P);
  d.q = p.q;
  d.A = Eigen::MatrixXd(p.A);
  d.lower = p.lower;
  d.upper = p.upper;
  return d;
}

struct OracleResult {
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x;
  bool feasible_found = false;
};

// Brute-force active-set enumeration: every row is inactive, at its lower
// bound, or at its upper bound; each combination yields an equality-
// constrained QP solved densely. The best feasible candidate is the optimum
// for strictly convex P.
inline OracleResult active_set_enumerate(const DenseQp& p, double feas_tol = 1e-7) {
  const int n = static_cast<int>(p.q.size());
  const int m = static_cast<int>(p.A.rows());
  const double inf = std::numeric_limits<double>::infinity();
  OracleResult best;

  std::vector<int> state(m, 0);  // 0 inactive, 1 lower, 2 upper
  std::vector<int> active_rows;

  auto evaluate = [&]() {
    const int k = static_cast<int>(active_rows.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = p.P;
    Eigen::VectorXd rhs(n + k);
    rhs.head(n) = -p.q;
    for (int r = 0; r < k; ++r) {
      const int row = active_rows[r];
      kkt.block(n + r, 0, 1, n) = p.A.row(row);
      kkt.block(0, n + r, n, 1) = p.A.row(row).transpose();
      rhs[n + r] = state[row] == 1 ? p.lower[row] : p.upper[row];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return;
    Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd x = sol.head(n);
    Eigen::VectorXd ax = p.A * x;
    for (int i = 0; i < m; ++i) {
      if (p.lower[i] != -inf && ax[i] < p.lower[i] - feas_tol) return;
      if (p.upper[i] != inf && ax[i] > p.upper[i] + feas_tol) return;
    }
    const double obj = 0.5 * x.dot(p.P * x) + p.q.dot(x);
    if (obj < best.objective) {
      best.objective = obj;
      best.x = x;
      best.feasible_found = true;
    }
  };

  // depth-first over row states, pruning when more than n rows are active
  auto rec = [&](auto&& self, int row) -> void {
    if (static_cast<int>(active_rows.size()) > n) return;
    if (row == m) {
      evaluate();
      return;
    }
    const bool eq = p.lower[row] == p.upper[row];
    if (eq) {
      state[row] = 1;
      active_rows.push_back(row);
      self(self, row + 1);
      active_rows.pop_back();
      return;
    }
    state[row] = 0;
    self(self, row + 1);
    if (p.lower[row] != -inf) {
      state[row] = 1;
      active_rows.push_back(row);
      self(self, row + 1);
      active_rows.pop_back();
    }
    if (p.upper[row] != inf) {
      state[row] = 2;
      active_rows.push_back(row);
      self(self, row + 1);
      active_rows.pop_back();
    }
    state[row] = 0;
  };
  rec(rec, 0);
  return best;
}

// Random strictly convex QP, feasible by construction; row types are a mix of
// one-sided, boxed, and equality constraints.
inline cvxreg::QpProblem random_qp(cvxreg::Rng& rng, int n, int m) {
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = rng.normal();
  Eigen::MatrixXd pd = b * b.transpose() / n + 0.5 * Eigen::MatrixXd::Identity(n, n);
  std::vector<Eigen::Triplet<double>> pt, at;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pt.emplace_back(i, j, pd(i, j));
  Eigen::VectorXd q = rng.normal_vector(n);
  Eigen::VectorXd x0 = rng.normal_vector(n);
  Eigen::VectorXd lower(m), upper(m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd a = rng.normal_vector(n);
    for (int j = 0; j < n; ++j) at.emplace_back(i, j, a[j]);
    const double c = a.dot(x0);
    const double u = rng.uniform01();
    const double slack = 0.2 + std::abs(rng.normal());
    if (u < 0.4) {
      lower[i] = -inf;
      upper[i] = c + slack;
    } else if (u < 0.8) {
      lower[i] = c - slack;
      upper[i] = inf;
    } else if (u < 0.9) {
      lower[i] = c - slack;
      upper[i] = c + slack;
    } else {
      lower[i] = c;
      upper[i] = c;
    }
  }
  return cvxreg::QpProblem::from_triplets(n, m, pt, std::move(q), at, std::move(lower),
                                          std::move(upper));
}

}  // namespace oracles
