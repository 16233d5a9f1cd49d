#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cvxreg/funcspace.hpp"
#include "cvxreg/rng.hpp"

namespace cvxreg {

struct SieveFitConfig {
  int m = 1;
  int restarts = 0;       // 0 means the default 10 + m
  int max_rounds = 100;
  double gamma = std::numeric_limits<double>::infinity();
  bool fix_intercepts_zero = false;  // support-function mode
  std::uint64_t seed = 0;
  double ridge = 1e-8;    // for rank-deficient cells
};

struct MaxAffineFit {
  MaxAffine model;
  double objective = 0.0;                 // mean squared residual
  int rounds = 0;
  std::vector<double> round_objectives;   // of the winning restart
  bool size_warning = false;              // n < m (d+1)
};

namespace detail {

inline AffinePiece fit_cell(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            const std::vector<int>& rows, bool zero_intercept, double ridge) {
  const int d = static_cast<int>(x.cols());
  const int p = zero_intercept ? d : d + 1;
  Eigen::MatrixXd z(static_cast<int>(rows.size()), p);
  Eigen::VectorXd yy(static_cast<int>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    z.row(static_cast<int>(r)).head(d) = x.row(rows[r]);
    if (!zero_intercept) z(static_cast<int>(r), d) = 1.0;
    yy[static_cast<int>(r)] = y[rows[r]];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  Eigen::VectorXd beta;
  if (qr.rank() == p) {
    beta = qr.solve(yy);
  } else {
    // rank-deficient cell: ridge-regularized normal equations
    Eigen::MatrixXd ztz = z.transpose() * z;
    ztz.diagonal().array() += ridge;
    beta = ztz.ldlt().solve(z.transpose() * yy);
  }
  AffinePiece piece;
  piece.a = beta.head(d);
  piece.b = zero_intercept ? 0.0 : beta[d];
  return piece;
}

inline double mean_sq_residual(const std::vector<AffinePiece>& pieces, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y) {
  const int n = static_cast<int>(x.rows());
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double f = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) f = std::max(f, p.a.dot(x.row(i)) + p.b);
    const double r = y[i] - f;
    s += r * r;
  }
  return s / n;
}

// one candidate: initial partition -> alternate (assign to argmax piece,
// refit each cell) until the assignment is stable
struct Candidate {
  std::vector<AffinePiece> pieces;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> round_objectives;
  int rounds = 0;
};

inline Candidate run_local_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  std::vector<std::vector<int>> cells, const SieveFitConfig& cfg) {
  const int n = static_cast<int>(x.rows());
  Candidate cand;
  std::vector<int> assign(n, -1);
  for (int round = 0; round < cfg.max_rounds; ++round) {
    // refit each nonempty cell
    std::vector<AffinePiece> pieces;
    for (const auto& cell : cells)
      if (!cell.empty()) pieces.push_back(fit_cell(x, y, cell, cfg.fix_intercepts_zero, cfg.ridge));
    if (pieces.empty()) break;
    const double obj = mean_sq_residual(pieces, x, y);
    if (obj < cand.objective) {
      cand.pieces = pieces;
      cand.objective = obj;
      cand.round_objectives.push_back(obj);
      cand.rounds = round + 1;
    } else {
      break;  // no improvement; keep the best snapshot
    }
    // reassign to the argmax piece, lowest index on ties
    std::vector<int> new_assign(n);
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bv = pieces[0].a.dot(x.row(i)) + pieces[0].b;
      for (std::size_t j = 1; j < pieces.size(); ++j) {
        const double v = pieces[j].a.dot(x.row(i)) + pieces[j].b;
        if (v > bv + 1e-15) {
          bv = v;
          best = static_cast<int>(j);
        }
      }
      new_assign[i] = best;
    }
    if (new_assign == assign) break;  // fixed point
    assign = new_assign;
    cells.assign(pieces.size(), {});
    for (int i = 0; i < n; ++i) cells[assign[i]].push_back(i);
  }
  return cand;
}

inline std::vector<std::vector<int>> voronoi_cells(const Eigen::MatrixXd& x, int m, Rng& rng) {
  const int n = static_cast<int>(x.rows());
  std::vector<int> centers;
  for (int tries = 0; tries < 16 * m && static_cast<int>(centers.size()) < m; ++tries) {
    const int c = rng.uniform_int(n);
    if (std::find(centers.begin(), centers.end(), c) == centers.end()) centers.push_back(c);
  }
  std::vector<std::vector<int>> cells(centers.size());
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double bd = (x.row(i) - x.row(centers[0])).squaredNorm();
    for (std::size_t j = 1; j < centers.size(); ++j) {
      const double dd = (x.row(i) - x.row(centers[j])).squaredNorm();
      if (dd < bd) {
        bd = dd;
        best = static_cast<int>(j);
      }
    }
    cells[best].push_back(i);
  }
  return cells;
}

// d = 1 only: contiguous blocks of the sorted design, the cell structure of
// any convex piecewise-affine function
inline std::vector<std::vector<int>> contiguous_cells(const Eigen::MatrixXd& x, int m) {
  const int n = static_cast<int>(x.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return x(a, 0) < x(b, 0); });
  std::vector<std::vector<int>> cells(std::min(m, n));
  for (int i = 0; i < n; ++i)
    cells[std::min<int>(static_cast<int>(cells.size()) - 1,
                        i * static_cast<int>(cells.size()) / n)]
        .push_back(order[i]);
  return cells;
}

// d = 1: random contiguous partition of the sorted design; the argmax cells
// of any 1-d max-affine function are contiguous, so this is the natural
// restart family
inline std::vector<std::vector<int>> random_contiguous_cells(const Eigen::MatrixXd& x, int m,
                                                             Rng& rng) {
  const int n = static_cast<int>(x.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return x(a, 0) < x(b, 0); });
  const int kmax = std::min(m, n);
  const int k = kmax <= 2 ? kmax : 2 + rng.uniform_int(kmax - 1);  // random block count
  std::vector<int> cuts;  // k - 1 distinct interior cut positions
  while (static_cast<int>(cuts.size()) < k - 1) {
    const int c = 1 + rng.uniform_int(n - 1);
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  cuts.push_back(0);
  cuts.push_back(n);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::vector<int>> cells;
  for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
    std::vector<int> cell;
    for (int i = cuts[b]; i < cuts[b + 1]; ++i) cell.push_back(order[i]);
    if (!cell.empty()) cells.push_back(std::move(cell));
  }
  return cells;
}

// d = 1, m >= n - 1: overlapping consecutive pairs; their secants interpolate
// data in convex position exactly
inline std::vector<std::vector<int>> secant_cells(const Eigen::MatrixXd& x, int m) {
  const int n = static_cast<int>(x.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return x(a, 0) < x(b, 0); });
  std::vector<std::vector<int>> cells;
  for (int i = 0; i + 1 < n && static_cast<int>(cells.size()) < m; ++i)
    cells.push_back({order[i], order[i + 1]});
  return cells;
}

}  // namespace detail

/// Least squares over m-piece max-affine functions by alternating partition
/// local search with random restarts; the best candidate by mean squared
/// residual wins. With finite gamma, intercepts are clipped afterwards so the
/// fitted max over the design sample stays below gamma.
inline MaxAffineFit fit_max_affine_detailed(const Eigen::MatrixXd& design,
                                            const Eigen::VectorXd& responses,
                                            const SieveFitConfig& cfg) {
  const int n = static_cast<int>(design.rows());
  const int d = static_cast<int>(design.cols());
  if (n == 0) throw std::invalid_argument("fit_max_affine: empty input");
  if (n != responses.size())
    throw std::invalid_argument("fit_max_affine: design/response size mismatch");
  if (cfg.m < 1) throw std::invalid_argument("fit_max_affine: m must be >= 1");

  const bool warn = n < cfg.m * (d + 1);
  if (warn)
    std::cerr << "fit_max_affine: n = " << n << " is below the recommended m(d+1) = "
              << cfg.m * (d + 1) << "\n";

  const int restarts = cfg.restarts > 0 ? cfg.restarts : 10 + cfg.m;
  detail::Candidate best;
  Rng rng = Rng::stream(cfg.seed, {0x51e4e, static_cast<std::uint64_t>(cfg.m)});
  for (int r = 0; r < restarts; ++r) {
    std::vector<std::vector<int>> cells;
    if (r == 0 && d == 1) {
      cells = detail::contiguous_cells(design, cfg.m);
    } else if (r == 1 && d == 1 && cfg.m >= 2) {
      cells = detail::secant_cells(design, cfg.m);
    } else if (cfg.m == 1) {
      cells.assign(1, std::vector<int>(n));
      std::iota(cells[0].begin(), cells[0].end(), 0);
    } else if (d == 1) {
      cells = detail::random_contiguous_cells(design, cfg.m, rng);
    } else {
      cells = detail::voronoi_cells(design, cfg.m, rng);
    }
    detail::Candidate cand = detail::run_local_search(design, responses, std::move(cells), cfg);
    if (cand.objective < best.objective) best = std::move(cand);
    if (cfg.m == 1) break;  // single-piece fit is deterministic
  }
  if (best.pieces.empty()) throw std::runtime_error("fit_max_affine: no candidate produced");

  if (std::isfinite(cfg.gamma)) {
    for (auto& p : best.pieces) {
      double sup = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) sup = std::max(sup, p.a.dot(design.row(i)) + p.b);
      if (sup > cfg.gamma) p.b -= sup - cfg.gamma;
    }
    best.objective = detail::mean_sq_residual(best.pieces, design, responses);
  }

  MaxAffineFit fit{MaxAffine(std::move(best.pieces)), best.objective, best.rounds,
                   std::move(best.round_objectives), warn};
  return fit;
}

inline MaxAffine fit_max_affine(const Eigen::MatrixXd& design, const Eigen::VectorXd& responses,
                                const SieveFitConfig& cfg) {
  return fit_max_affine_detailed(design, responses, cfg).model;
}

/// Cosine basis on [0,1]: phi_1 = 1, phi_j(x) = sqrt(2) cos(pi (j-1) x),
/// orthonormal in L^2 under the uniform law.
inline Eigen::MatrixXd cosine_basis(const Eigen::VectorXd& x, int m) {
  Eigen::MatrixXd phi(x.size(), m);
  for (int i = 0; i < x.size(); ++i) {
    phi(i, 0) = 1.0;
    for (int j = 1; j < m; ++j)
      phi(i, j) = std::numbers::sqrt2 * std::cos(std::numbers::pi * j * x[i]);
  }
  return phi;
}

inline double eval_linear_sieve(const Eigen::VectorXd& coef, double x) {
  double v = coef.size() > 0 ? coef[0] : 0.0;
  for (int j = 1; j < coef.size(); ++j)
    v += coef[j] * std::numbers::sqrt2 * std::cos(std::numbers::pi * j * x);
  return v;
}

/// Projection of Y onto the span of the first m cosine basis functions;
/// rank-deficient designs get the minimum-norm solution.
inline Eigen::VectorXd fit_linear_sieve(const Eigen::MatrixXd& design,
                                        const Eigen::VectorXd& responses, int m) {
  if (design.cols() != 1) throw std::invalid_argument("fit_linear_sieve: design must be n x 1");
  if (m < 1) throw std::invalid_argument("fit_linear_sieve: m must be >= 1");
  for (int i = 0; i < design.rows(); ++i)
    if (design(i, 0) < -1e-12 || design(i, 0) > 1.0 + 1e-12)
      throw std::invalid_argument("fit_linear_sieve: design must lie in [0, 1]");
  Eigen::MatrixXd phi = cosine_basis(design.col(0), m);
  return phi.completeOrthogonalDecomposition().solve(responses);
}

}  // namespace cvxreg
