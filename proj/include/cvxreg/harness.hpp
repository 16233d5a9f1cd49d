#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cvxreg/blse.hpp"
#include "cvxreg/funcspace.hpp"
#include "cvxreg/geometry.hpp"
#include "cvxreg/rng.hpp"
#include "cvxreg/selection.hpp"
#include "cvxreg/sieve.hpp"
#include "cvxreg/supportfn.hpp"

namespace cvxreg {

struct EstimatorSpec {
  enum class Kind { Blse, Sieve, LAdaptive, PAdaptive, LinearSieve, LAdaptiveSet, PAdaptiveSet };
  Kind kind = Kind::Blse;
  double gamma = std::numeric_limits<double>::infinity();
  int m = 0;  // fixed piece count for Sieve/LinearSieve; 0 means the benchmark cutoff
  Preset preset = Preset::Practical;
  NormKind select_norm = NormKind::Discrete;
  int restarts = 0;
  double qp_tol = 1e-6;
};

/// Monte Carlo experiment protocol: data generation, estimation, risk
/// recording, and rate-exponent fitting. Fully deterministic given the seed;
/// replications own independent RNG streams.
struct ExperimentConfig {
  Domain dom;
  RealFunction truth;
  double noise_sigma = 0.0;
  std::vector<int> n_grid;
  int reps = 1;
  EstimatorSpec estimator;
  bool norm_continuous = true;
  bool norm_discrete = true;
  int quad_n = 4096;
  std::uint64_t seed = 0;
  int threads = 0;              // 0 means the hardware concurrency
  bool sphere_design = false;   // support-function mode: directions on the sphere
  bool equispaced_d1 = false;   // fixed design x_k = (k-1)/(n-1) in d = 1
  double max_failure_fraction = 0.1;

  ExperimentConfig(Domain dom_, RealFunction truth_) : dom(std::move(dom_)), truth(std::move(truth_)) {}

  void validate() const {
    for (std::size_t i = 1; i < n_grid.size(); ++i)
      if (n_grid[i] <= n_grid[i - 1])
        throw std::invalid_argument("ExperimentConfig: n_grid must be strictly increasing");
    if (n_grid.empty()) throw std::invalid_argument("ExperimentConfig: empty n_grid");
    if (reps < 1) throw std::invalid_argument("ExperimentConfig: reps must be >= 1");
    if (noise_sigma < 0.0) throw std::invalid_argument("ExperimentConfig: sigma must be >= 0");
    if (estimator.kind == EstimatorSpec::Kind::Blse) {
      for (int n : n_grid)
        if (n > 800)
          throw std::invalid_argument(
              "ExperimentConfig: BLSE capped at n <= 800 (n^2 constraints); use a sieve "
              "estimator for larger n");
    }
    const bool set_kind = estimator.kind == EstimatorSpec::Kind::LAdaptiveSet ||
                          estimator.kind == EstimatorSpec::Kind::PAdaptiveSet;
    if (set_kind && !sphere_design)
      throw std::invalid_argument("ExperimentConfig: set estimators need sphere_design");
  }
};

struct ExponentFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  bool defined = false;
};

struct RiskCell {
  int n = 0;
  NormKind norm = NormKind::Discrete;
  std::vector<double> losses;  // per successful replication
  int failures = 0;

  double mean() const {
    double s = 0.0;
    for (double l : losses) s += l;
    return losses.empty() ? 0.0 : s / losses.size();
  }
  double stderr_() const {
    if (losses.size() < 2) return 0.0;
    const double mu = mean();
    double ss = 0.0;
    for (double l : losses) ss += (l - mu) * (l - mu);
    return std::sqrt(ss / (losses.size() - 1) / losses.size());
  }
};

/// OLS slope of log risk on log n with its standard error.
inline std::pair<double, double> fit_rate_exponent(const std::vector<double>& ns,
                                                   const std::vector<double>& risks) {
  if (ns.size() != risks.size() || ns.size() < 3)
    throw std::invalid_argument("fit_rate_exponent: need matched lengths >= 3");
  const int k = static_cast<int>(ns.size());
  std::vector<double> lx(k), ly(k);
  for (int i = 0; i < k; ++i) {
    if (!(risks[i] > 0.0)) throw std::invalid_argument("fit_rate_exponent: risks must be positive");
    lx[i] = std::log(ns[i]);
    ly[i] = std::log(risks[i]);
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (int i = 0; i < k; ++i) {
    const double fit = my + slope * (lx[i] - mx);
    rss += (ly[i] - fit) * (ly[i] - fit);
  }
  const double se = k > 2 ? std::sqrt(rss / (k - 2) / sxx) : 0.0;
  return {slope, se};
}

struct RiskReport {
  std::vector<int> n_grid;
  int reps = 0;
  std::vector<RiskCell> cells;  // ordered: for each norm, each n
  std::map<std::string, ExponentFit> exponents;  // key "continuous" / "discrete"
  std::vector<std::uint64_t> dataset_hashes;     // per (n, rep), flattened

  const RiskCell& cell(NormKind norm, int n) const {
    for (const auto& c : cells)
      if (c.norm == norm && c.n == n) return c;
    throw std::out_of_range("RiskReport: no such cell");
  }
};

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t dataset_hash(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(x.data(), sizeof(double) * x.size(), h);
  h = fnv1a(y.data(), sizeof(double) * y.size(), h);
  return h;
}

// fitted model as an evaluable function; built per replication
using Fitter = std::function<RealFunction(const Eigen::MatrixXd&, const Eigen::VectorXd&,
                                          std::uint64_t fit_seed)>;

inline Fitter make_fitter(const EstimatorSpec& est, const Domain& dom, int n, double sigma_sq) {
  const int d = dom.dim();
  switch (est.kind) {
    case EstimatorSpec::Kind::Blse:
      return [est, dom](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t) {
        BlseSpec spec(x, y, est.gamma, dom);
        return RealFunction(fit_blse(spec, est.qp_tol).estimator);
      };
    case EstimatorSpec::Kind::Sieve: {
      const int m = est.m > 0 ? est.m : benchmark_cutoff(ModelFamily::convex_max_affine(d), n);
      return [est, m](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t fs) {
        SieveFitConfig cfg;
        cfg.m = m;
        cfg.restarts = est.restarts;
        cfg.gamma = est.gamma;
        cfg.seed = fs;
        return RealFunction(fit_max_affine(x, y, cfg));
      };
    }
    case EstimatorSpec::Kind::LAdaptive:
    case EstimatorSpec::Kind::PAdaptive: {
      return [est, d, n, sigma_sq](const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   std::uint64_t fs) {
        const ModelFamily fam = ModelFamily::convex_max_affine(d);
        const int cutoff = benchmark_cutoff(fam, n);
        std::map<int, MaxAffine> fits;
        std::map<int, Eigen::VectorXd> values;
        for (int m = 1; m <= cutoff; ++m) {
          SieveFitConfig cfg;
          cfg.m = m;
          cfg.restarts = est.restarts;
          cfg.gamma = est.gamma;
          cfg.seed = fs + 7919 * m;
          MaxAffine f = fit_max_affine(x, y, cfg);
          Eigen::VectorXd v(x.rows());
          for (int i = 0; i < x.rows(); ++i) v[i] = f(x.row(i).transpose());
          values.emplace(m, std::move(v));
          fits.emplace(m, std::move(f));
        }
        // sigma^2 is assumed known in the selection theory; the harness passes
        // the data-generating value through
        SelectionConstants sc = est.preset == Preset::Theory
                                    ? SelectionConstants::theory(sigma_sq, est.gamma)
                                    : SelectionConstants::practical(sigma_sq, est.gamma);
        const SelectionResult sel =
            est.kind == EstimatorSpec::Kind::LAdaptive
                ? l_adaptive_select(values, NormKind::Discrete, sc, fam, n)
                : p_adaptive_select(values, y, sc, fam, n);
        return RealFunction(fits.at(sel.m));
      };
    }
    case EstimatorSpec::Kind::LinearSieve: {
      const int m = est.m > 0 ? est.m : benchmark_cutoff(ModelFamily::linear_sieve(), n);
      return [m](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t) {
        Eigen::VectorXd coef = fit_linear_sieve(x, y, m);
        return RealFunction::custom([coef](const Eigen::VectorXd& z) {
          return eval_linear_sieve(coef, z[0]);
        });
      };
    }
    case EstimatorSpec::Kind::LAdaptiveSet:
    case EstimatorSpec::Kind::PAdaptiveSet: {
      return [est, sigma_sq](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t fs) {
        SupportSample sample(x, y);
        SelectionConstants sc = est.preset == Preset::Theory
                                    ? SelectionConstants::theory(sigma_sq, est.gamma)
                                    : SelectionConstants::practical(sigma_sq, est.gamma);
        SetEstimateOptions opts;
        opts.seed = fs;
        opts.restarts = est.restarts;
        opts.l_norm = est.select_norm;
        const SelectionMethod method = est.kind == EstimatorSpec::Kind::LAdaptiveSet
                                           ? SelectionMethod::L
                                           : SelectionMethod::P;
        return RealFunction(adaptive_set_estimate(sample, sc, method, opts).estimate.as_max_affine());
      };
    }
  }
  throw std::logic_error("make_fitter: unknown estimator kind");
}

}  // namespace detail

/// Run the full Monte Carlo protocol: for each n and replication, sample the
/// design, add Gaussian noise, fit, and record the losses in the requested
/// norms on a quadrature sample shared across estimators (common random
/// numbers). Failed replications are flagged and excluded; more than
/// max_failure_fraction failures abort the experiment.
inline RiskReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const int d = cfg.dom.dim();
  RiskReport report;
  report.n_grid = cfg.n_grid;
  report.reps = cfg.reps;

  std::vector<RiskCell> cont_cells, disc_cells;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const int n = cfg.n_grid[ni];
    // quadrature shared across estimators and replications at this n
    std::vector<Eigen::VectorXd> quad;
    if (cfg.norm_continuous) {
      if (cfg.sphere_design) {
        Rng rng = Rng::stream(cfg.seed, {0x9add, static_cast<std::uint64_t>(n)});
        for (int i = 0; i < cfg.quad_n; ++i) quad.push_back(rng.unit_vector(d));
      } else {
        quad = sample_design(cfg.dom, cfg.quad_n,
                             Rng::stream(cfg.seed, {0x9add, static_cast<std::uint64_t>(n)}).next_u64());
      }
    }
    Eigen::VectorXd truth_quad(static_cast<int>(quad.size()));
    for (std::size_t i = 0; i < quad.size(); ++i) truth_quad[static_cast<int>(i)] = cfg.truth(quad[i]);

    detail::Fitter fitter =
        detail::make_fitter(cfg.estimator, cfg.dom, n, cfg.noise_sigma * cfg.noise_sigma);

    std::vector<double> cont_losses(cfg.reps, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> disc_losses(cfg.reps, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::uint64_t> hashes(cfg.reps, 0);
    std::vector<char> failed(cfg.reps, 0);

    auto run_rep = [&](int rep) {
      Rng design_rng = Rng::stream(cfg.seed, {1, static_cast<std::uint64_t>(n),
                                              static_cast<std::uint64_t>(rep)});
      Rng noise_rng = Rng::stream(cfg.seed, {2, static_cast<std::uint64_t>(n),
                                             static_cast<std::uint64_t>(rep)});
      Eigen::MatrixXd x(n, d);
      if (cfg.equispaced_d1) {
        if (d != 1) throw std::invalid_argument("equispaced design requires d = 1");
        for (int i = 0; i < n; ++i) x(i, 0) = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
      } else if (cfg.sphere_design) {
        for (int i = 0; i < n; ++i) x.row(i) = design_rng.unit_vector(d).transpose();
      } else {
        auto pts = sample_design(cfg.dom, n, design_rng.next_u64());
        for (int i = 0; i < n; ++i) x.row(i) = pts[i].transpose();
      }
      Eigen::VectorXd f0_at_x(n), y(n);
      for (int i = 0; i < n; ++i) {
        f0_at_x[i] = cfg.truth(x.row(i).transpose());
        y[i] = f0_at_x[i] + cfg.noise_sigma * noise_rng.normal();
      }
      hashes[rep] = detail::dataset_hash(x, y);
      try {
        const std::uint64_t fit_seed =
            Rng::stream(cfg.seed, {3, static_cast<std::uint64_t>(n),
                                   static_cast<std::uint64_t>(rep)})
                .next_u64();
        RealFunction fhat = fitter(x, y, fit_seed);
        if (cfg.norm_discrete) {
          Eigen::VectorXd vhat(n);
          for (int i = 0; i < n; ++i) vhat[i] = fhat(x.row(i).transpose());
          disc_losses[rep] = l2_disc_sq(vhat, f0_at_x);
        }
        if (cfg.norm_continuous) {
          Eigen::VectorXd vhat(static_cast<int>(quad.size()));
          for (std::size_t i = 0; i < quad.size(); ++i)
            vhat[static_cast<int>(i)] = fhat(quad[i]);
          cont_losses[rep] = l2_disc_sq(vhat, truth_quad);
        }
      } catch (const std::exception&) {
        failed[rep] = 1;
      }
    };

    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, cfg.reps));
    if (threads == 1) {
      for (int rep = 0; rep < cfg.reps; ++rep) run_rep(rep);
    } else {
      std::atomic<int> next{0};
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
          for (int rep = next.fetch_add(1); rep < cfg.reps; rep = next.fetch_add(1)) run_rep(rep);
        });
      for (auto& th : pool) th.join();
    }

    int fail_count = 0;
    for (char f : failed) fail_count += f;
    if (fail_count > cfg.max_failure_fraction * cfg.reps)
      throw std::runtime_error("run_experiment: more than " +
                               std::to_string(cfg.max_failure_fraction * 100) +
                               "% of replications failed at n = " + std::to_string(n));

    if (cfg.norm_continuous) {
      RiskCell c{n, NormKind::Continuous, {}, fail_count};
      for (int rep = 0; rep < cfg.reps; ++rep)
        if (!failed[rep]) c.losses.push_back(cont_losses[rep]);
      cont_cells.push_back(std::move(c));
    }
    if (cfg.norm_discrete) {
      RiskCell c{n, NormKind::Discrete, {}, fail_count};
      for (int rep = 0; rep < cfg.reps; ++rep)
        if (!failed[rep]) c.losses.push_back(disc_losses[rep]);
      disc_cells.push_back(std::move(c));
    }
    for (std::uint64_t h : hashes) report.dataset_hashes.push_back(h);
  }

  auto add_norm = [&](std::vector<RiskCell>& cells, const std::string& key) {
    if (cells.empty()) return;
    ExponentFit ef;
    std::vector<double> ns, means;
    bool all_positive = true;
    for (const auto& c : cells) {
      ns.push_back(c.n);
      means.push_back(c.mean());
      all_positive = all_positive && c.mean() > 0.0;
    }
    if (all_positive && ns.size() >= 3) {
      auto [slope, se] = fit_rate_exponent(ns, means);
      ef = {slope, se, true};
    }
    report.exponents[key] = ef;
    for (auto& c : cells) report.cells.push_back(std::move(c));
  };
  add_norm(cont_cells, "continuous");
  add_norm(disc_cells, "discrete");
  return report;
}

/// Equispaced d = 1 design x_k = (k-1)/(n-1), unconstrained LSE, discrete
/// risk only.
inline RiskReport fixed_design_experiment_d1(const std::vector<int>& n_grid,
                                             const RealFunction& truth, double sigma, int reps,
                                             std::uint64_t seed, double qp_tol = 1e-6) {
  ExperimentConfig cfg(Domain::interval(0.0, 1.0), truth);
  cfg.noise_sigma = sigma;
  cfg.n_grid = n_grid;
  cfg.reps = reps;
  cfg.seed = seed;
  cfg.norm_continuous = false;
  cfg.norm_discrete = true;
  cfg.equispaced_d1 = true;
  cfg.estimator.kind = EstimatorSpec::Kind::Blse;
  cfg.estimator.gamma = std::numeric_limits<double>::infinity();
  cfg.estimator.qp_tol = qp_tol;
  return run_experiment(cfg);
}

}  // namespace cvxreg
