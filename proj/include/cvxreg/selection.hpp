#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvxreg {

enum class NormKind { Continuous, Discrete };
enum class Preset { Theory, Practical };

/// Constants of the two adaptive procedures. The Theory preset carries the
/// explicit (astronomically conservative) constants from the risk bounds; the
/// Practical preset is calibrated so that desk-scale experiments exercise
/// nontrivial selection. All logarithms are natural.
struct SelectionConstants {
  double sigma_sq = 1.0;
  double gamma = 1.0;
  double kappa = 1.0;
  double t_cont = 2.0;  // threshold constant, continuous norm
  double t_disc = 2.0;  // threshold constant, discrete norm
  double v_const = 73728.0;
  double cp1 = 2.0;  // penalty pen(m) = cp1 sigma^2 D_m / n (cp2 kappa log n + L_m)
  double cp2 = 1.0;
  double lm = 1.0;   // L_m identically this value; sum exp(-L_m D_m) < infinity
  Preset preset = Preset::Practical;

  static SelectionConstants theory(double sigma_sq, double gamma) {
    SelectionConstants c;
    c.sigma_sq = sigma_sq;
    c.gamma = gamma;
    c.kappa = 1.0;
    c.v_const = 73728.0;
    // t^# = 2 (k^# + 4 (v or 1) d^#) with the deviation-bound constants
    // k^d = 819200, d^d = 8, k^c = 7.56e6, d^c = 3.35e5
    c.t_disc = 2.0 * (819200.0 + 4.0 * c.v_const * 8.0);
    c.t_cont = 2.0 * (7.56e6 + 4.0 * c.v_const * 3.35e5);
    c.cp1 = 16.0;
    c.cp2 = 9.0 * 32768.0;  // 9 * 2^15
    c.lm = 1.0;
    c.preset = Preset::Theory;
    return c;
  }

  static SelectionConstants practical(double sigma_sq, double gamma) {
    SelectionConstants c;
    c.sigma_sq = sigma_sq;
    c.gamma = gamma;
    c.kappa = 1.0;
    c.t_cont = 2.0;
    c.t_disc = 2.0;
    c.cp1 = 2.0;
    c.cp2 = 1.0;
    c.lm = 1.0;
    c.preset = Preset::Practical;
    return c;
  }

  double t_for(NormKind norm) const { return norm == NormKind::Continuous ? t_cont : t_disc; }

  /// L^# = sigma^2 or (Gamma^2 when the norm is continuous).
  double big_l(NormKind norm) const {
    return norm == NormKind::Continuous ? std::max(sigma_sq, gamma * gamma) : sigma_sq;
  }
};

/// A family of low-dimensional models with its pseudo-dimension bound and
/// benchmark cutoff rule.
struct ModelFamily {
  enum class Kind { ConvexMaxAffine, SupportFunction, LinearSieve };
  Kind kind = Kind::ConvexMaxAffine;
  int d = 1;

  static ModelFamily convex_max_affine(int d) { return {Kind::ConvexMaxAffine, d}; }
  static ModelFamily support_function(int d) { return {Kind::SupportFunction, d}; }
  static ModelFamily linear_sieve() { return {Kind::LinearSieve, 1}; }
};

/// Pseudo-dimension bound D_m: 6 m d log(3m) for m-piece max-affine classes,
/// 3 m d log(3m) for m-vertex support functions, m for linear spaces.
inline double pdim_bound(const ModelFamily& fam, int m) {
  if (m < 1) throw std::invalid_argument("pdim_bound: m must be >= 1");
  switch (fam.kind) {
    case ModelFamily::Kind::ConvexMaxAffine:
      return 6.0 * m * fam.d * std::log(3.0 * m);
    case ModelFamily::Kind::SupportFunction:
      return 3.0 * m * fam.d * std::log(3.0 * m);
    case ModelFamily::Kind::LinearSieve:
      return static_cast<double>(m);
  }
  return static_cast<double>(m);
}

/// Rate-balancing benchmark cutoff: n^{d/(d+4)} for convex regression,
/// n^{(d-1)/(d+3)} for support functions, sqrt(n) for the linear sieve
/// (no rule is given for the latter; the default is flagged in the audit).
inline int benchmark_cutoff(const ModelFamily& fam, int n) {
  if (n < 2) throw std::invalid_argument("benchmark_cutoff: n must be >= 2");
  double expo = 0.5;
  switch (fam.kind) {
    case ModelFamily::Kind::ConvexMaxAffine:
      expo = static_cast<double>(fam.d) / (fam.d + 4.0);
      break;
    case ModelFamily::Kind::SupportFunction:
      expo = (fam.d - 1.0) / (fam.d + 3.0);
      break;
    case ModelFamily::Kind::LinearSieve:
      expo = 0.5;
      break;
  }
  const int cut = static_cast<int>(std::floor(std::pow(static_cast<double>(n), expo) + 1e-9));
  return std::max(1, std::min(cut, n));
}

struct LComparison {
  int m = 0, m_prime = 0;
  double distance_sq = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct PCriterion {
  int m = 0;
  double gamma_n = 0.0;
  double penalty = 0.0;
  double criterion = 0.0;
};

struct SelectionAudit {
  std::string method;  // "L" or "P"
  int selected_m = 0;
  int cutoff = 0;
  NormKind norm = NormKind::Discrete;
  Preset preset = Preset::Practical;
  std::vector<LComparison> comparisons;  // L-adaptive
  std::vector<PCriterion> criteria;      // P-adaptive
  std::string notes;
};

struct SelectionResult {
  int m = 0;
  SelectionAudit audit;
};

inline double l_threshold(const SelectionConstants& c, const ModelFamily& fam, NormKind norm,
                          int m_prime, int n) {
  return c.t_for(norm) * c.big_l(norm) * c.kappa * pdim_bound(fam, m_prime) * std::log(n) / n;
}

/// pen(m) = cp1 sigma^2 D_m / n (cp2 kappa log n + L_m).
inline double penalty(const SelectionConstants& c, const ModelFamily& fam, int m, int n) {
  return c.cp1 * c.sigma_sq * pdim_bound(fam, m) / n * (c.cp2 * c.kappa * std::log(n) + c.lm);
}

/// gamma_n(g) = |g|_n^2 - 2 <Y, g>_n; satisfies gamma_n(g) + |Y|_n^2 =
/// |Y - g|_n^2 exactly.
inline double gamma_n(const Eigen::VectorXd& g_at_design, const Eigen::VectorXd& y) {
  if (g_at_design.size() != y.size()) throw std::invalid_argument("gamma_n: length mismatch");
  const double n = static_cast<double>(y.size());
  return g_at_design.squaredNorm() / n - 2.0 * y.dot(g_at_design) / n;
}

/// L-adaptive (risk-comparison) selection: the smallest m whose fit is within
/// threshold of every larger fit up to the cutoff, distances in the requested
/// norm. fit_values maps m to the fitted function's values on the norm's
/// evaluation points (the design for the discrete norm, a shared quadrature
/// sample for the continuous one). m = cutoff always qualifies vacuously.
inline SelectionResult l_adaptive_select(const std::map<int, Eigen::VectorXd>& fit_values,
                                         NormKind norm, const SelectionConstants& c,
                                         const ModelFamily& fam, int n) {
  const int cutoff = benchmark_cutoff(fam, n);
  for (int m = 1; m <= cutoff; ++m)
    if (!fit_values.count(m))
      throw std::invalid_argument("l_adaptive_select: missing fit for m = " + std::to_string(m));

  SelectionAudit audit;
  audit.method = "L";
  audit.cutoff = cutoff;
  audit.norm = norm;
  audit.preset = c.preset;
  if (fam.kind == ModelFamily::Kind::LinearSieve)
    audit.notes = "linear-sieve cutoff uses the default floor(sqrt(n)) rule";

  int selected = cutoff;
  bool decided = false;
  for (int m = 1; m <= cutoff; ++m) {
    bool all_pass = true;
    for (int mp = m; mp <= cutoff; ++mp) {
      const Eigen::VectorXd& a = fit_values.at(m);
      const Eigen::VectorXd& b = fit_values.at(mp);
      if (a.size() != b.size())
        throw std::invalid_argument("l_adaptive_select: fit value lengths differ");
      const double dist = a.size() == 0 ? 0.0 : (a - b).squaredNorm() / a.size();
      const double thr = l_threshold(c, fam, norm, mp, n);
      const bool pass = dist <= thr;
      audit.comparisons.push_back({m, mp, dist, thr, pass});
      all_pass = all_pass && pass;
    }
    if (all_pass && !decided) {
      selected = m;
      decided = true;
    }
  }
  audit.selected_m = selected;
  return {selected, audit};
}

/// P-adaptive (penalized least squares) selection: argmin over m up to the
/// cutoff of gamma_n(f_m) + pen(m); ties resolve to the smallest m.
inline SelectionResult p_adaptive_select(const std::map<int, Eigen::VectorXd>& fit_values,
                                         const Eigen::VectorXd& responses,
                                         const SelectionConstants& c, const ModelFamily& fam,
                                         int n) {
  const int cutoff = benchmark_cutoff(fam, n);
  for (int m = 1; m <= cutoff; ++m)
    if (!fit_values.count(m))
      throw std::invalid_argument("p_adaptive_select: missing fit for m = " + std::to_string(m));

  SelectionAudit audit;
  audit.method = "P";
  audit.cutoff = cutoff;
  audit.preset = c.preset;
  audit.notes = "argmin over all m truncated at the benchmark cutoff";
  if (fam.kind == ModelFamily::Kind::LinearSieve)
    audit.notes += "; linear-sieve cutoff uses the default floor(sqrt(n)) rule";

  int selected = 1;
  double best = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= cutoff; ++m) {
    const double g = gamma_n(fit_values.at(m), responses);
    const double pen = penalty(c, fam, m, n);
    const double crit = g + pen;
    audit.criteria.push_back({m, g, pen, crit});
    if (crit < best) {
      best = crit;
      selected = m;
    }
  }
  audit.selected_m = selected;
  return {selected, audit};
}

}  // namespace cvxreg
