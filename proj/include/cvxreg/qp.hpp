#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace cvxreg {

/// Sparse convex QP in standard form:
///   min 1/2 x^T P x + q^T x   s.t.  l <= A x <= u.
struct QpProblem {
  Eigen::SparseMatrix<double> P;  // N x N, symmetric PSD
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;  // M x N
  Eigen::VectorXd lower, upper;

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_constraints() const { return static_cast<int>(lower.size()); }

  static QpProblem from_triplets(int n, int m, const std::vector<Eigen::Triplet<double>>& p_t,
                                 Eigen::VectorXd q, const std::vector<Eigen::Triplet<double>>& a_t,
                                 Eigen::VectorXd lower, Eigen::VectorXd upper) {
    QpProblem p;
    p.P.resize(n, n);
    p.P.setFromTriplets(p_t.begin(), p_t.end());
    Eigen::SparseMatrix<double> pt = p.P.transpose();
    p.P = 0.5 * (p.P + pt);  // enforce symmetry
    p.A.resize(m, n);
    p.A.setFromTriplets(a_t.begin(), a_t.end());
    p.q = std::move(q);
    p.lower = std::move(lower);
    p.upper = std::move(upper);
    p.validate();
    return p;
  }

  void validate() const {
    if (q.size() != P.rows() || P.rows() != P.cols())
      throw std::invalid_argument("QpProblem: P/q dimension mismatch");
    if (A.rows() != lower.size() || A.rows() != upper.size() || A.cols() != q.size())
      throw std::invalid_argument("QpProblem: A/l/u dimension mismatch");
    for (int i = 0; i < lower.size(); ++i)
      if (lower[i] > upper[i]) throw std::invalid_argument("QpProblem: requires l <= u");
  }

  double objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(P.selfadjointView<Eigen::Upper>() * x) + q.dot(x);
  }
};

enum class QpStatus { Solved, MaxIter, Infeasible };

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd dual;
  QpStatus status = QpStatus::MaxIter;
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  double objective = std::numeric_limits<double>::infinity();
};

struct QpSettings {
  double tol = 1e-6;
  int max_iter = 200000;
  double rho = 0.1;
  double sigma = 1e-8;  // static KKT regularization; P is rank-deficient for the BLSE
  double alpha = 1.6;
  int check_interval = 25;
  bool adaptive_rho = true;
  bool polish = true;
  std::optional<Eigen::VectorXd> x0;
};

namespace detail {

inline double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

// KKT matrix [[P + sigma I, A^T], [A, -diag(1/rho)]], lower half stored
inline Eigen::SparseMatrix<double> build_kkt(const QpProblem& p, double sigma,
                                             const Eigen::VectorXd& rho) {
  const int n = p.num_vars();
  const int m = p.num_constraints();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(p.P.nonZeros() + p.A.nonZeros() + n + m);
  for (int k = 0; k < p.P.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.P, k); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, sigma);
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it)
      t.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int i = 0; i < m; ++i) t.emplace_back(n + i, n + i, -1.0 / rho[i]);
  Eigen::SparseMatrix<double> kkt(n + m, n + m);
  kkt.setFromTriplets(t.begin(), t.end());
  return kkt;
}

inline Eigen::VectorXd make_rho_vector(const QpProblem& p, double rho_bar) {
  const int m = p.num_constraints();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd rho(m);
  for (int i = 0; i < m; ++i) {
    if (p.lower[i] == -inf && p.upper[i] == inf)
      rho[i] = 1e-6;
    else if (p.upper[i] - p.lower[i] < 1e-10)
      rho[i] = 1e3 * rho_bar;  // equality row
    else
      rho[i] = rho_bar;
  }
  return rho;
}

// equality-constrained refinement on the detected active set
inline bool polish(const QpProblem& p, const QpSettings& st, QpSolution& sol) {
  const int n = p.num_vars();
  const int m = p.num_constraints();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<int> active;
  std::vector<double> bound;
  Eigen::VectorXd ax = p.A * sol.x;
  const double act_tol = std::sqrt(st.tol);
  for (int i = 0; i < m; ++i) {
    const bool low = p.lower[i] != -inf && (sol.dual[i] < -1e-12 || ax[i] - p.lower[i] < act_tol);
    const bool up = p.upper[i] != inf && (sol.dual[i] > 1e-12 || p.upper[i] - ax[i] < act_tol);
    if (up) {
      active.push_back(i);
      bound.push_back(p.upper[i]);
    } else if (low) {
      active.push_back(i);
      bound.push_back(p.lower[i]);
    }
  }
  const int k = static_cast<int>(active.size());
  std::vector<Eigen::Triplet<double>> t;
  for (int c = 0; c < p.P.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.P, c); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  const double delta = 1e-9;
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, delta);
  Eigen::SparseMatrix<double> at = p.A.transpose();
  for (int r = 0; r < k; ++r) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(at, active[r]); it; ++it)
      t.emplace_back(n + r, static_cast<int>(it.row()), it.value());
    t.emplace_back(n + r, n + r, -delta);
  }
  Eigen::SparseMatrix<double> kkt(n + k, n + k);
  kkt.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt(kkt);
  if (ldlt.info() != Eigen::Success) return false;
  Eigen::VectorXd rhs(n + k);
  rhs.head(n) = -p.q;
  for (int r = 0; r < k; ++r) rhs[n + r] = bound[r];
  // a couple of iterative-refinement rounds against the unregularized system
  Eigen::VectorXd sol_v = Eigen::VectorXd::Zero(n + k);
  for (int round = 0; round < 4; ++round) {
    Eigen::VectorXd resid = rhs;
    resid.head(n) -= p.P.selfadjointView<Eigen::Upper>() * sol_v.head(n);
    for (int r = 0; r < k; ++r) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(at, active[r]); it; ++it) {
        resid[static_cast<int>(it.row())] -= it.value() * sol_v[n + r];
        resid[n + r] -= it.value() * sol_v[static_cast<int>(it.row())];
      }
    }
    sol_v += ldlt.solve(resid);
  }
  Eigen::VectorXd x_new = sol_v.head(n);
  Eigen::VectorXd y_new = Eigen::VectorXd::Zero(m);
  for (int r = 0; r < k; ++r) y_new[active[r]] = sol_v[n + r];
  // accept only if feasibility and stationarity both improve
  Eigen::VectorXd ax_new = p.A * x_new;
  double prim = 0.0;
  for (int i = 0; i < m; ++i)
    prim = std::max(prim, std::max(p.lower[i] - ax_new[i], ax_new[i] - p.upper[i]));
  prim = std::max(prim, 0.0);
  const double dual = inf_norm(p.P.selfadjointView<Eigen::Upper>() * x_new + p.q +
                               p.A.transpose() * y_new);
  if (std::max(prim, dual) <= std::max(sol.primal_residual, sol.dual_residual)) {
    sol.x = std::move(x_new);
    sol.dual = std::move(y_new);
    sol.primal_residual = prim;
    sol.dual_residual = dual;
    return true;
  }
  return false;
}

}  // namespace detail

/// Operator-splitting (ADMM) solve with a cached sparse LDLT factorization of
/// the KKT system; rho is rebalanced when the residual ratio drifts.
inline QpSolution qp_solve(const QpProblem& p, const QpSettings& st = {}) {
  p.validate();
  if (!(st.tol > 0.0)) throw std::invalid_argument("qp_solve: tol must be positive");
  const int n = p.num_vars();
  const int m = p.num_constraints();
  const double inf = std::numeric_limits<double>::infinity();

  QpSolution sol;
  sol.x = st.x0.value_or(Eigen::VectorXd::Zero(n));
  sol.dual = Eigen::VectorXd::Zero(m);

  if (m == 0) {
    // unconstrained: a single regularized solve with refinement
    Eigen::SparseMatrix<double> h = p.P;
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < p.P.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(p.P, k); it; ++it)
        t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, st.sigma);
    Eigen::SparseMatrix<double> hs(n, n);
    hs.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt(hs);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("qp_solve: singular KKT system after regularization");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int round = 0; round < 6; ++round)
      x += ldlt.solve(-p.q - p.P.selfadjointView<Eigen::Upper>() * x);
    sol.x = x;
    sol.primal_residual = 0.0;
    sol.dual_residual = detail::inf_norm(p.P.selfadjointView<Eigen::Upper>() * x + p.q);
    sol.status = sol.dual_residual <= st.tol ? QpStatus::Solved : QpStatus::MaxIter;
    sol.objective = p.objective(sol.x);
    return sol;
  }

  Eigen::VectorXd rho = detail::make_rho_vector(p, st.rho);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
  ldlt.compute(detail::build_kkt(p, st.sigma, rho));
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("qp_solve: singular KKT system after regularization");

  Eigen::VectorXd x = sol.x;
  Eigen::VectorXd z = p.A * x;
  for (int i = 0; i < m; ++i) z[i] = std::clamp(z[i], p.lower[i], p.upper[i]);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd rhs(n + m), xz(n + m), z_next(m), y_prev(m);

  auto residuals = [&](double& prim, double& dua) {
    Eigen::VectorXd ax = p.A * x;
    prim = detail::inf_norm(ax - z);
    dua = detail::inf_norm(p.P.selfadjointView<Eigen::Upper>() * x + p.q + p.A.transpose() * y);
  };

  int iter = 0;
  for (; iter < st.max_iter; ++iter) {
    rhs.head(n) = st.sigma * x - p.q;
    for (int i = 0; i < m; ++i) rhs[n + i] = z[i] - y[i] / rho[i];
    xz = ldlt.solve(rhs);

    y_prev = y;
    const Eigen::VectorXd x_tilde = xz.head(n);
    const Eigen::VectorXd nu = xz.tail(m);
    Eigen::VectorXd z_tilde = z + (nu - y).cwiseQuotient(rho);

    x = st.alpha * x_tilde + (1.0 - st.alpha) * x;
    for (int i = 0; i < m; ++i) {
      const double zc = st.alpha * z_tilde[i] + (1.0 - st.alpha) * z[i] + y[i] / rho[i];
      z_next[i] = std::clamp(zc, p.lower[i], p.upper[i]);
      y[i] = y[i] + rho[i] * (st.alpha * z_tilde[i] + (1.0 - st.alpha) * z[i] - z_next[i]);
    }
    z = z_next;

    if ((iter + 1) % st.check_interval == 0) {
      double prim, dua;
      residuals(prim, dua);
      if (std::max(prim, dua) <= st.tol) {
        sol.status = QpStatus::Solved;
        sol.primal_residual = prim;
        sol.dual_residual = dua;
        break;
      }
      // primal infeasibility certificate from the dual update direction
      Eigen::VectorXd dy = y - y_prev;
      const double dy_norm = detail::inf_norm(dy);
      if (dy_norm > 1e-12) {
        Eigen::VectorXd aty = p.A.transpose() * (dy / dy_norm);
        double support = 0.0;
        bool certificate = detail::inf_norm(aty) <= 1e-8;
        if (certificate) {
          for (int i = 0; i < m; ++i) {
            const double di = dy[i] / dy_norm;
            if (di > 1e-10) {
              if (p.upper[i] == inf) {
                certificate = false;
                break;
              }
              support += p.upper[i] * di;
            } else if (di < -1e-10) {
              if (p.lower[i] == -inf) {
                certificate = false;
                break;
              }
              support += p.lower[i] * di;
            }
          }
        }
        if (certificate && support < -1e-10) {
          sol.status = QpStatus::Infeasible;
          sol.primal_residual = prim;
          sol.dual_residual = dua;
          break;
        }
      }
      if (st.adaptive_rho) {
        Eigen::VectorXd ax = p.A * x;
        const double prim_rel =
            prim / std::max({detail::inf_norm(ax), detail::inf_norm(z), 1e-10});
        const double dual_rel =
            dua / std::max({detail::inf_norm(p.P.selfadjointView<Eigen::Upper>() * x),
                            detail::inf_norm(p.q),
                            detail::inf_norm(p.A.transpose() * y), 1e-10});
        const double ratio = prim_rel / std::max(dual_rel, 1e-16);
        if (ratio > 10.0 || ratio < 0.1) {
          const double scale = std::clamp(std::sqrt(ratio), 1e-3, 1e3);
          const double rho_new = std::clamp(rho.mean() * scale, 1e-6, 1e6);
          rho = detail::make_rho_vector(p, rho_new);
          ldlt.compute(detail::build_kkt(p, st.sigma, rho));
          if (ldlt.info() != Eigen::Success)
            throw std::runtime_error("qp_solve: singular KKT system after rho update");
        }
      }
    }
  }

  if (sol.status == QpStatus::MaxIter) residuals(sol.primal_residual, sol.dual_residual);
  sol.iterations = std::min(iter + 1, st.max_iter);
  sol.x = x;
  sol.dual = y;
  if (sol.status == QpStatus::Solved && st.polish) detail::polish(p, st, sol);
  sol.objective = p.objective(sol.x);
  return sol;
}

inline QpSolution qp_solve(const QpProblem& p, double tol, int max_iter) {
  QpSettings st;
  st.tol = tol;
  st.max_iter = max_iter;
  return qp_solve(p, st);
}

/// Plain-text sparse triplet dump of (P, q, A, l, u) for cross-checks against
/// external solvers.
inline void dump_qp(const QpProblem& p, std::ostream& os) {
  os << "qp " << p.num_vars() << " " << p.num_constraints() << "\n";
  os << "P " << p.P.nonZeros() << "\n";
  for (int k = 0; k < p.P.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.P, k); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
  os << "q\n";
  for (int i = 0; i < p.q.size(); ++i) os << p.q[i] << "\n";
  os << "A " << p.A.nonZeros() << "\n";
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
  os << "bounds\n";
  for (int i = 0; i < p.lower.size(); ++i) os << p.lower[i] << " " << p.upper[i] << "\n";
}

}  // namespace cvxreg
