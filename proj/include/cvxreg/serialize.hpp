#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvxreg/blse.hpp"
#include "cvxreg/funcspace.hpp"
#include "cvxreg/geometry.hpp"
#include "cvxreg/harness.hpp"
#include "cvxreg/selection.hpp"
#include "cvxreg/supportfn.hpp"

namespace cvxreg {

using json = nlohmann::ordered_json;

namespace detail {

// result JSON is byte-identical across reruns: every number is printed with
// 17 significant digits
inline void dump17(const json& j, std::ostream& os) {
  switch (j.type()) {
    case json::value_t::number_float: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", j.get<double>());
      os << buf;
      return;
    }
    case json::value_t::array: {
      os << '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << ',';
        first = false;
        dump17(e, os);
      }
      os << ']';
      return;
    }
    case json::value_t::object: {
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        os << json(it.key()).dump() << ':';
        dump17(it.value(), os);
      }
      os << '}';
      return;
    }
    default:
      os << j.dump();
  }
}

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& what) {
  if (!j.is_object()) throw std::invalid_argument(what + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument(what + ": unknown key '" + it.key() + "'");
}

}  // namespace detail

inline std::string dump_json(const json& j) {
  std::ostringstream os;
  detail::dump17(j, os);
  return os.str();
}

// ---- Domain ----------------------------------------------------------------

inline json to_json(const Domain& dom) {
  json j;
  if (dom.is_ball()) {
    j["kind"] = "ball";
    j["center"] = std::vector<double>(dom.center().data(), dom.center().data() + dom.center().size());
    j["radius"] = dom.radius();
  } else {
    j["kind"] = "polytope";
    json verts = json::array();
    for (const auto& v : dom.vertices())
      verts.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    j["vertices"] = std::move(verts);
    j["simplices"] = dom.simplices();
  }
  return j;
}

inline Domain domain_from_json(const json& j) {
  detail::check_keys(j, {"kind", "center", "radius", "vertices", "simplices"}, "domain");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ball") {
    const auto c = j.at("center").get<std::vector<double>>();
    Eigen::VectorXd center = Eigen::Map<const Eigen::VectorXd>(c.data(), c.size());
    return Domain::ball(center, j.at("radius").get<double>());
  }
  if (kind == "polytope") {
    std::vector<Eigen::VectorXd> verts;
    for (const auto& v : j.at("vertices")) {
      const auto vv = v.get<std::vector<double>>();
      verts.push_back(Eigen::Map<const Eigen::VectorXd>(vv.data(), vv.size()));
    }
    return Domain::polytope(std::move(verts), j.at("simplices").get<std::vector<std::vector<int>>>());
  }
  throw std::invalid_argument("domain: kind must be 'ball' or 'polytope'");
}

// ---- MaxAffine -------------------------------------------------------------

inline json to_json(const MaxAffine& f) {
  json arr = json::array();
  for (const auto& p : f.pieces()) {
    json jp;
    jp["a"] = std::vector<double>(p.a.data(), p.a.data() + p.a.size());
    jp["b"] = p.b;
    arr.push_back(std::move(jp));
  }
  return arr;
}

inline MaxAffine max_affine_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("max_affine: expected a JSON array");
  std::vector<AffinePiece> pieces;
  for (const auto& jp : j) {
    detail::check_keys(jp, {"a", "b"}, "max_affine piece");
    const auto a = jp.at("a").get<std::vector<double>>();
    pieces.push_back({Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()),
                      jp.at("b").get<double>()});
  }
  return MaxAffine(std::move(pieces));
}

// ---- BlseFit ---------------------------------------------------------------

inline json to_json(const BlseFit& fit) {
  json j;
  j["y_hat"] = std::vector<double>(fit.y_hat.data(), fit.y_hat.data() + fit.y_hat.size());
  json g = json::array();
  for (int i = 0; i < fit.g_hat.rows(); ++i) {
    std::vector<double> row(fit.g_hat.cols());
    for (int c = 0; c < fit.g_hat.cols(); ++c) row[c] = fit.g_hat(i, c);
    g.push_back(std::move(row));
  }
  j["g_hat"] = std::move(g);
  j["estimator"] = to_json(fit.estimator);
  j["sse"] = fit.sse;
  json s;
  s["status"] = fit.solver.status == QpStatus::Solved
                    ? "solved"
                    : (fit.solver.status == QpStatus::MaxIter ? "max_iter" : "infeasible");
  s["iterations"] = fit.solver.iterations;
  s["primal_residual"] = fit.solver.primal_residual;
  s["dual_residual"] = fit.solver.dual_residual;
  s["objective"] = fit.solver.objective;
  j["solver"] = std::move(s);
  return j;
}

// ---- selection audit -------------------------------------------------------

inline json to_json(const SelectionAudit& a) {
  json j;
  j["method"] = a.method;
  j["selected_m"] = a.selected_m;
  j["cutoff"] = a.cutoff;
  j["norm"] = a.norm == NormKind::Continuous ? "continuous" : "discrete";
  j["preset"] = a.preset == Preset::Theory ? "theory" : "practical";
  if (!a.comparisons.empty()) {
    json arr = json::array();
    for (const auto& c : a.comparisons) {
      json jc;
      jc["m"] = c.m;
      jc["m_prime"] = c.m_prime;
      jc["distance_sq"] = c.distance_sq;
      jc["threshold"] = c.threshold;
      jc["pass"] = c.pass;
      arr.push_back(std::move(jc));
    }
    j["comparisons"] = std::move(arr);
  }
  if (!a.criteria.empty()) {
    json arr = json::array();
    for (const auto& c : a.criteria) {
      json jc;
      jc["m"] = c.m;
      jc["gamma_n"] = c.gamma_n;
      jc["penalty"] = c.penalty;
      jc["criterion"] = c.criterion;
      arr.push_back(std::move(jc));
    }
    j["criteria"] = std::move(arr);
  }
  if (!a.notes.empty()) j["notes"] = a.notes;
  return j;
}

// ---- risk report -----------------------------------------------------------

inline json to_json(const RiskReport& r) {
  json j;
  j["n_grid"] = r.n_grid;
  j["reps"] = r.reps;
  json cells = json::array();
  for (const auto& c : r.cells) {
    json jc;
    jc["n"] = c.n;
    jc["norm"] = c.norm == NormKind::Continuous ? "continuous" : "discrete";
    jc["mean_risk"] = c.mean();
    jc["stderr"] = c.stderr_();
    jc["failures"] = c.failures;
    jc["losses"] = c.losses;
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  json ex;
  for (const auto& [key, ef] : r.exponents) {
    json je;
    je["defined"] = ef.defined;
    if (ef.defined) {
      je["slope"] = ef.slope;
      je["stderr"] = ef.stderr_;
    }
    ex[key] = std::move(je);
  }
  j["exponents"] = std::move(ex);
  json hashes = json::array();
  for (std::uint64_t h : r.dataset_hashes) hashes.push_back(h);
  j["dataset_hashes"] = std::move(hashes);
  return j;
}

/// Flat per-replication losses for external plotting: n, norm, rep, loss.
inline void write_losses_csv(const RiskReport& r, std::ostream& os) {
  os << "n,norm,rep,loss\n";
  for (const auto& c : r.cells) {
    const char* norm = c.norm == NormKind::Continuous ? "continuous" : "discrete";
    for (std::size_t rep = 0; rep < c.losses.size(); ++rep) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", c.losses[rep]);
      os << c.n << ',' << norm << ',' << rep << ',' << buf << '\n';
    }
  }
}

// ---- experiment config -----------------------------------------------------

inline RealFunction truth_from_json(const json& j) {
  detail::check_keys(j, {"type", "Q", "c", "r", "pieces", "vertices"}, "truth");
  const std::string type = j.at("type").get<std::string>();
  if (type == "quadratic") {
    const auto rows = j.at("Q").get<std::vector<std::vector<double>>>();
    const int d = static_cast<int>(rows.size());
    Eigen::MatrixXd q(d, d);
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < d; ++c) q(i, c) = rows[i][c];
    Eigen::VectorXd cv = Eigen::VectorXd::Zero(d);
    if (j.contains("c")) {
      const auto c = j.at("c").get<std::vector<double>>();
      cv = Eigen::Map<const Eigen::VectorXd>(c.data(), c.size());
    }
    return RealFunction(Quadratic(q, cv, j.value("r", 0.0)));
  }
  if (type == "max_affine") return RealFunction(max_affine_from_json(j.at("pieces")));
  if (type == "polytope_support") {
    const auto rows = j.at("vertices").get<std::vector<std::vector<double>>>();
    std::vector<AffinePiece> pieces;
    for (const auto& row : rows)
      pieces.push_back({Eigen::Map<const Eigen::VectorXd>(row.data(), row.size()), 0.0});
    return RealFunction(MaxAffine(std::move(pieces)));
  }
  throw std::invalid_argument("truth: unknown type '" + type + "'");
}

inline EstimatorSpec estimator_from_json(const json& j) {
  detail::check_keys(j, {"kind", "gamma", "m", "preset", "select_norm", "restarts", "qp_tol"},
                     "estimator");
  EstimatorSpec e;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "blse")
    e.kind = EstimatorSpec::Kind::Blse;
  else if (kind == "sieve")
    e.kind = EstimatorSpec::Kind::Sieve;
  else if (kind == "l_adaptive")
    e.kind = EstimatorSpec::Kind::LAdaptive;
  else if (kind == "p_adaptive")
    e.kind = EstimatorSpec::Kind::PAdaptive;
  else if (kind == "linear_sieve")
    e.kind = EstimatorSpec::Kind::LinearSieve;
  else if (kind == "l_adaptive_set")
    e.kind = EstimatorSpec::Kind::LAdaptiveSet;
  else if (kind == "p_adaptive_set")
    e.kind = EstimatorSpec::Kind::PAdaptiveSet;
  else
    throw std::invalid_argument("estimator: unknown kind '" + kind + "'");
  if (j.contains("gamma")) {
    if (j.at("gamma").is_string() && j.at("gamma").get<std::string>() == "inf")
      e.gamma = std::numeric_limits<double>::infinity();
    else
      e.gamma = j.at("gamma").get<double>();
  }
  e.m = j.value("m", 0);
  if (j.contains("preset")) {
    const std::string p = j.at("preset").get<std::string>();
    if (p == "theory")
      e.preset = Preset::Theory;
    else if (p == "practical")
      e.preset = Preset::Practical;
    else
      throw std::invalid_argument("estimator: preset must be 'theory' or 'practical'");
  }
  if (j.contains("select_norm")) {
    const std::string nk = j.at("select_norm").get<std::string>();
    if (nk == "continuous")
      e.select_norm = NormKind::Continuous;
    else if (nk == "discrete")
      e.select_norm = NormKind::Discrete;
    else
      throw std::invalid_argument("estimator: select_norm must be 'continuous' or 'discrete'");
  }
  e.restarts = j.value("restarts", 0);
  e.qp_tol = j.value("qp_tol", 1e-6);
  return e;
}

inline ExperimentConfig experiment_from_json(const json& j) {
  detail::check_keys(j,
                     {"version", "domain", "truth", "noise_sigma", "n_grid", "reps", "estimator",
                      "norms", "quad_n", "seed", "threads", "sphere_design", "equispaced_d1"},
                     "experiment");
  if (!j.contains("version") || j.at("version").get<int>() != 1)
    throw std::invalid_argument("experiment: config must carry version = 1");
  ExperimentConfig cfg(domain_from_json(j.at("domain")), truth_from_json(j.at("truth")));
  cfg.noise_sigma = j.at("noise_sigma").get<double>();
  cfg.n_grid = j.at("n_grid").get<std::vector<int>>();
  cfg.reps = j.at("reps").get<int>();
  cfg.estimator = estimator_from_json(j.at("estimator"));
  if (j.contains("norms")) {
    cfg.norm_continuous = false;
    cfg.norm_discrete = false;
    for (const auto& n : j.at("norms")) {
      const std::string s = n.get<std::string>();
      if (s == "continuous")
        cfg.norm_continuous = true;
      else if (s == "discrete")
        cfg.norm_discrete = true;
      else
        throw std::invalid_argument("experiment: norms entries must be 'continuous'/'discrete'");
    }
  }
  cfg.quad_n = j.value("quad_n", 4096);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.threads = j.value("threads", 0);
  cfg.sphere_design = j.value("sphere_design", false);
  cfg.equispaced_d1 = j.value("equispaced_d1", false);
  cfg.validate();
  return cfg;
}

// ---- CSV data --------------------------------------------------------------

/// Reads a CSV whose last column is the response and preceding columns are
/// coordinates. A non-numeric first line is treated as a header.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> read_xy_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
      } catch (...) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw std::invalid_argument("csv: non-numeric data row");
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("csv: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().size() < 2)
    throw std::invalid_argument("csv: need at least one coordinate column and a response");
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows.front().size()) - 1;
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) x(i, c) = rows[i][c];
    y[i] = rows[i][d];
  }
  return {std::move(x), std::move(y)};
}

}  // namespace cvxreg
