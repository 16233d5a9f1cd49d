#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cvxreg/funcspace.hpp"
#include "cvxreg/rng.hpp"
#include "cvxreg/selection.hpp"
#include "cvxreg/sieve.hpp"

namespace cvxreg {

/// Noisy support-function measurements Y_i = h_K(U_i) + eps_i along unit
/// directions U_i.
struct SupportSample {
  Eigen::MatrixXd directions;  // n x d, unit rows
  Eigen::VectorXd responses;

  SupportSample(Eigen::MatrixXd dirs, Eigen::VectorXd y)
      : directions(std::move(dirs)), responses(std::move(y)) {
    if (directions.rows() != responses.size())
      throw std::invalid_argument("SupportSample: size mismatch");
    for (int i = 0; i < directions.rows(); ++i)
      if (std::abs(directions.row(i).norm() - 1.0) > 1e-10)
        throw std::invalid_argument("SupportSample: directions must be unit vectors");
  }

  int size() const { return static_cast<int>(responses.size()); }
  int dim() const { return static_cast<int>(directions.cols()); }
};

/// Candidate convex body given by a vertex set; its support function
/// h(u) = max_j <v_j, u> is the zero-intercept max-affine over directions.
struct PolytopeEstimate {
  Eigen::MatrixXd vertices;  // m x d

  double operator()(const Eigen::VectorXd& u) const { return support_value(u); }

  double support_value(const Eigen::VectorXd& u) const {
    if (vertices.rows() == 0) throw std::invalid_argument("PolytopeEstimate: empty vertex set");
    return (vertices * u).maxCoeff();
  }

  MaxAffine as_max_affine() const {
    std::vector<AffinePiece> pieces;
    for (int j = 0; j < vertices.rows(); ++j)
      pieces.push_back({vertices.row(j).transpose(), 0.0});
    return MaxAffine(std::move(pieces));
  }

  /// Diagnostic: vertices that are extreme for at least one of a batch of
  /// probe directions. Redundant interior vertices are harmless to h and
  /// are kept as fitted.
  int hull_extreme_count(int probes = 4096) const {
    const int d = static_cast<int>(vertices.cols());
    Rng rng = Rng::stream(0x4c11, {static_cast<std::uint64_t>(probes)});
    std::vector<bool> extreme(vertices.rows(), false);
    for (int t = 0; t < probes; ++t) {
      Eigen::VectorXd u = rng.unit_vector(d);
      int arg = 0;
      (vertices * u).maxCoeff(&arg);
      extreme[arg] = true;
    }
    int c = 0;
    for (bool e : extreme) c += e ? 1 : 0;
    return c;
  }
};

inline double support_eval(const PolytopeEstimate& p, const Eigen::VectorXd& u) {
  return p.support_value(u);
}

/// Least squares over m-vertex support functions; delegates to the
/// zero-intercept max-affine fitter. Finite gamma projects vertices into
/// B(0, gamma).
inline PolytopeEstimate fit_polytope_support(const SupportSample& sample, int m,
                                             SieveFitConfig cfg = {}) {
  cfg.m = m;
  cfg.fix_intercepts_zero = true;
  const double gamma = cfg.gamma;
  cfg.gamma = std::numeric_limits<double>::infinity();  // bounding is by vertex projection
  MaxAffine fit = fit_max_affine(sample.directions, sample.responses, cfg);
  Eigen::MatrixXd verts(fit.size(), sample.dim());
  for (int j = 0; j < fit.size(); ++j) {
    Eigen::VectorXd v = fit.pieces()[j].a;
    if (std::isfinite(gamma)) {
      const double norm = v.norm();
      if (norm > gamma) v *= gamma / norm;
    }
    verts.row(j) = v.transpose();
  }
  return PolytopeEstimate{std::move(verts)};
}

struct ContinuousSphereLoss {
  int quad_n = 4096;
  std::uint64_t seed = 0;
};
struct DiscreteDirectionsLoss {
  const Eigen::MatrixXd* directions = nullptr;
};

/// Squared loss between two bodies through their support functions: Monte
/// Carlo over uniform sphere directions, or the mean over given directions.
inline double losses_support(const PolytopeEstimate& k1, const PolytopeEstimate& k2,
                             const ContinuousSphereLoss& norm) {
  if (k1.vertices.cols() != k2.vertices.cols())
    throw std::invalid_argument("losses_support: dimension mismatch");
  const int d = static_cast<int>(k1.vertices.cols());
  Rng rng = Rng::stream(norm.seed, {0x5fe7e});
  double s = 0.0;
  for (int i = 0; i < norm.quad_n; ++i) {
    const Eigen::VectorXd u = rng.unit_vector(d);
    const double diff = k1.support_value(u) - k2.support_value(u);
    s += diff * diff;
  }
  return s / norm.quad_n;
}

inline double losses_support(const PolytopeEstimate& k1, const PolytopeEstimate& k2,
                             const DiscreteDirectionsLoss& norm) {
  if (k1.vertices.cols() != k2.vertices.cols())
    throw std::invalid_argument("losses_support: dimension mismatch");
  const Eigen::MatrixXd& dirs = *norm.directions;
  double s = 0.0;
  for (int i = 0; i < dirs.rows(); ++i) {
    const Eigen::VectorXd u = dirs.row(i).transpose();
    const double diff = k1.support_value(u) - k2.support_value(u);
    s += diff * diff;
  }
  return s / dirs.rows();
}

enum class SelectionMethod { L, P };

struct SetEstimateResult {
  PolytopeEstimate estimate;
  SelectionAudit audit;
  std::map<int, PolytopeEstimate> candidates;
};

struct SetEstimateOptions {
  std::uint64_t seed = 0;
  int restarts = 0;
  NormKind l_norm = NormKind::Discrete;  // norm for the L-adaptive comparisons
  int quad_n = 4096;                     // sphere quadrature when l_norm is continuous
};

/// Fit m = 1..cutoff support-function models and run the requested adaptive
/// selector with the SupportFunction model family.
inline SetEstimateResult adaptive_set_estimate(const SupportSample& sample,
                                               const SelectionConstants& consts,
                                               SelectionMethod method,
                                               const SetEstimateOptions& opts = {}) {
  const int n = sample.size();
  if (n < 2) throw std::invalid_argument("adaptive_set_estimate: need n >= 2");
  const ModelFamily fam = ModelFamily::support_function(sample.dim());
  const int cutoff = benchmark_cutoff(fam, n);

  std::map<int, PolytopeEstimate> candidates;
  std::map<int, Eigen::VectorXd> values;  // on the evaluation points of the norm
  std::vector<Eigen::VectorXd> quad;
  const bool continuous = method == SelectionMethod::L && opts.l_norm == NormKind::Continuous;
  if (continuous) {
    Rng rng = Rng::stream(opts.seed, {0x5fe7e, 0x9});
    quad.reserve(opts.quad_n);
    for (int i = 0; i < opts.quad_n; ++i) quad.push_back(rng.unit_vector(sample.dim()));
  }
  for (int m = 1; m <= cutoff; ++m) {
    SieveFitConfig cfg;
    cfg.restarts = opts.restarts;
    cfg.seed = opts.seed + 7919 * m;
    cfg.gamma = consts.gamma;
    PolytopeEstimate est = fit_polytope_support(sample, m, cfg);
    Eigen::VectorXd v;
    if (continuous) {
      v.resize(static_cast<int>(quad.size()));
      for (std::size_t i = 0; i < quad.size(); ++i) v[static_cast<int>(i)] = est.support_value(quad[i]);
    } else {
      v.resize(n);
      for (int i = 0; i < n; ++i) v[i] = est.support_value(sample.directions.row(i).transpose());
    }
    values.emplace(m, std::move(v));
    candidates.emplace(m, std::move(est));
  }

  SelectionResult sel =
      method == SelectionMethod::L
          ? l_adaptive_select(values, opts.l_norm, consts, fam, n)
          : p_adaptive_select(values, sample.responses, consts, fam, n);
  SetEstimateResult res{candidates.at(sel.m), sel.audit, std::move(candidates)};
  return res;
}

}  // namespace cvxreg
