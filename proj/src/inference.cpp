#include "crep/inference.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace crep {

std::string to_string(EmMode mode) {
  switch (mode) {
    case EmMode::constrained: return "constrained";
    case EmMode::unconstrained: return "unconstrained";
    case EmMode::eta_zero: return "eta0";
  }
  return "constrained";
}

EmMode em_mode_from_string(const std::string& s) {
  if (s == "constrained") return EmMode::constrained;
  if (s == "unconstrained") return EmMode::unconstrained;
  if (s == "eta0" || s == "eta_zero") return EmMode::eta_zero;
  throw data_error("unknown mode: " + s);
}

namespace {

void check_config(const EmConfig& cfg) {
  if (cfg.max_iter < 1) throw data_error("max_iter must be at least 1");
  if (cfg.tol <= 0) throw data_error("tol must be positive");
  if (cfg.check_every < 1) throw data_error("check_every must be at least 1");
  if (cfg.patience < 1) throw data_error("patience must be at least 1");
  if (cfg.restarts < 1) throw data_error("restarts must be at least 1");
  if (cfg.epsilon <= 0) throw data_error("epsilon must be positive");
}

std::vector<std::size_t> covered_edges(const DirectedGraph& g,
                                       const TrainMask* mask) {
  std::vector<std::size_t> ids;
  ids.reserve(g.n_edges());
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    const Edge& edge = g.edges()[e];
    if (mask && !mask->trains(edge.src, edge.dst)) continue;
    ids.push_back(e);
  }
  return ids;
}

// Sum of m.row(j) over held-out column indices j of each row i.
Eigen::MatrixXd held_row_sums(const TrainMask& mask, const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  const auto& rows = mask.held_by_row();
  for (int i = 0; i < mask.n_nodes(); ++i)
    for (int j : rows[i]) out.row(i) += m.row(j);
  return out;
}

// Sum of m.row(i) over held-out row indices i of each column j.
Eigen::MatrixXd held_col_sums(const TrainMask& mask, const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  const auto& cols = mask.held_by_col();
  for (int j = 0; j < mask.n_nodes(); ++j)
    for (int i : cols[j]) out.row(j) += m.row(i);
  return out;
}

// Total weight on trained pairs.
long long trained_weight(const DirectedGraph& g, const TrainMask* mask) {
  if (!mask) return g.total_weight();
  long long m = 0;
  for (const Edge& e : g.edges())
    if (mask->trains(e.src, e.dst)) m += e.weight;
  return m;
}

// Sum of A_ji over trained ordered pairs (i, j).
long long trained_reverse_weight(const DirectedGraph& g,
                                 const TrainMask* mask) {
  if (!mask) return g.total_weight();
  long long m = 0;
  for (const Edge& e : g.edges())
    if (mask->trains(e.dst, e.src)) m += e.weight;
  return m;
}

// -(sum_T lambda^0_ij + eta * sum_T A_ji). Shared verbatim by the
// likelihood and the bound so the two agree to rounding error.
double negative_rate_mass(const CrepParams& p, const DirectedGraph& g,
                          const TrainMask* mask) {
  double sum0 = lambda0_offdiag_sum(p);
  if (mask) {
    Eigen::MatrixXd uw = p.u * p.w;
    Eigen::MatrixXd hv = held_row_sums(*mask, p.v);
    sum0 -= uw.cwiseProduct(hv).sum();
  }
  double arev = static_cast<double>(trained_reverse_weight(g, mask));
  return -(sum0 + p.eta * arev);
}

void e_step_ids(const CrepParams& p, const DirectedGraph& g,
                const std::vector<std::size_t>& ids, double eps,
                VariationalState* st) {
  const int k = p.k;
  const int kk = k * k;
  const auto n = static_cast<Eigen::Index>(ids.size());
  st->k = k;
  if (&st->edge_ids != &ids) st->edge_ids = ids;
  if (st->rho1.size() != n) {
    st->rho1.resize(n);
    st->rho2.resize(n);
    st->phi.resize(n, kk);
  }

  Eigen::MatrixXd uw = p.u * p.w;
  for (Eigen::Index t = 0; t < n; ++t) {
    const Edge& e = g.edges()[ids[t]];
    const double lam0 = uw.row(e.src).dot(p.v.row(e.dst));
    const double rec = p.eta * static_cast<double>(g.reverse_weight(ids[t]));
    const double lam = lam0 + rec;
    if (lam < eps) {
      st->rho1[t] = 1.0;
      st->rho2[t] = 0.0;
    } else {
      st->rho1[t] = lam0 / lam;
      st->rho2[t] = rec / lam;
    }
    if (lam0 < eps) {
      st->phi.row(t).setConstant(1.0 / kk);
    } else {
      for (int a = 0; a < k; ++a) {
        const double ua = p.u(e.src, a);
        for (int b = 0; b < k; ++b)
          st->phi(t, a * k + b) = ua * p.w(a, b) * p.v(e.dst, b) / lam0;
      }
    }
  }
}

}  // namespace

double lambda0(const CrepParams& p, int i, int j) {
  return p.u.row(i) * p.w * p.v.row(j).transpose();
}

double lambda0_offdiag_sum(const CrepParams& p) {
  Eigen::RowVectorXd su = p.u.colwise().sum();
  Eigen::RowVectorXd sv = p.v.colwise().sum();
  double total = su * p.w * sv.transpose();
  double diag = (p.u * p.w).cwiseProduct(p.v).sum();
  return total - diag;
}

double log_pseudo_likelihood(const CrepParams& p, const DirectedGraph& g,
                             const TrainMask* mask, double epsilon) {
  Eigen::MatrixXd uw = p.u * p.w;
  double slog = 0.0;
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    const Edge& edge = g.edges()[e];
    if (mask && !mask->trains(edge.src, edge.dst)) continue;
    const double lam = uw.row(edge.src).dot(p.v.row(edge.dst)) +
                       p.eta * static_cast<double>(g.reverse_weight(e));
    slog += static_cast<double>(edge.weight) * std::log(std::max(lam, epsilon));
  }
  return slog + negative_rate_mass(p, g, mask);
}

VariationalState e_step(const CrepParams& p, const DirectedGraph& g,
                        const TrainMask* mask, double epsilon) {
  VariationalState st;
  st.edge_ids = covered_edges(g, mask);
  e_step_ids(p, g, st.edge_ids, epsilon, &st);
  return st;
}

double variational_objective(const CrepParams& p, const VariationalState& st,
                             const DirectedGraph& g, const TrainMask* mask) {
  const int k = st.k;
  double obj = 0.0;
  for (std::size_t t = 0; t < st.edge_ids.size(); ++t) {
    const Edge& e = g.edges()[st.edge_ids[t]];
    const double a = static_cast<double>(e.weight);
    const double arev = static_cast<double>(g.reverse_weight(st.edge_ids[t]));
    const double r1 = st.rho1[static_cast<Eigen::Index>(t)];
    const double r2 = st.rho2[static_cast<Eigen::Index>(t)];
    double term = 0.0;
    for (int ka = 0; ka < k; ++ka)
      for (int kb = 0; kb < k; ++kb) {
        const double m = r1 * st.phi(static_cast<Eigen::Index>(t), ka * k + kb);
        if (m <= 0.0) continue;
        const double rate = p.u(e.src, ka) * p.w(ka, kb) * p.v(e.dst, kb);
        term += m * (std::log(rate) - std::log(m));
      }
    if (r2 > 0.0) term += r2 * (std::log(p.eta * arev) - std::log(r2));
    obj += a * term;
  }
  return obj + negative_rate_mass(p, g, mask);
}

Eigen::MatrixXd m_step_memberships(const CrepParams& p,
                                   const VariationalState& st,
                                   const DirectedGraph& g, Side side,
                                   EmMode mode, const TrainMask* mask,
                                   double epsilon) {
  const int n = p.n_nodes();
  const int k = p.k;
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(n, k);
  for (std::size_t t = 0; t < st.edge_ids.size(); ++t) {
    const Edge& e = g.edges()[st.edge_ids[t]];
    const double ar1 =
        static_cast<double>(e.weight) * st.rho1[static_cast<Eigen::Index>(t)];
    if (ar1 == 0.0) continue;
    const auto row = st.phi.row(static_cast<Eigen::Index>(t));
    if (side == Side::out) {
      for (int ka = 0; ka < k; ++ka) {
        double s = 0.0;
        for (int kb = 0; kb < k; ++kb) s += row[ka * k + kb];
        num(e.src, ka) += ar1 * s;
      }
    } else {
      for (int kb = 0; kb < k; ++kb) {
        double s = 0.0;
        for (int ka = 0; ka < k; ++ka) s += row[ka * k + kb];
        num(e.dst, kb) += ar1 * s;
      }
    }
  }

  Eigen::MatrixXd out(n, k);
  if (mode == EmMode::unconstrained) {
    // Per-entry normalizer from stationarity of the bound: for u it is
    // [W (sum_j v_j - v_i - held_i)]_k, symmetric in the in-side.
    Eigen::MatrixXd held;
    Eigen::RowVectorXd total;
    if (side == Side::out) {
      total = p.v.colwise().sum();
      held = mask ? held_row_sums(*mask, p.v)
                  : Eigen::MatrixXd::Zero(n, k);
    } else {
      total = p.u.colwise().sum();
      held = mask ? held_col_sums(*mask, p.u)
                  : Eigen::MatrixXd::Zero(n, k);
    }
    Eigen::MatrixXd rest =
        ((-(side == Side::out ? p.v : p.u) - held).rowwise() + total);
    Eigen::MatrixXd den;
    if (side == Side::out)
      den = rest * p.w.transpose();
    else
      den = rest * p.w;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < k; ++a)
        out(i, a) = den(i, a) < epsilon ? 0.0 : num(i, a) / den(i, a);
  } else {
    // Row normalization; the scalar gamma_i equals the row sum of the
    // numerator, which matches sum_j A_ij lambda^0_ij / lambda_ij.
    for (int i = 0; i < n; ++i) {
      const double gamma = num.row(i).sum();
      if (gamma < epsilon)
        out.row(i).setZero();
      else
        out.row(i) = num.row(i) / gamma;
    }
  }
  return out;
}

Eigen::MatrixXd m_step_affinity(const CrepParams& p,
                                const VariationalState& st,
                                const DirectedGraph& g, const TrainMask* mask,
                                double epsilon) {
  const int k = p.k;
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t t = 0; t < st.edge_ids.size(); ++t) {
    const Edge& e = g.edges()[st.edge_ids[t]];
    const double ar1 =
        static_cast<double>(e.weight) * st.rho1[static_cast<Eigen::Index>(t)];
    if (ar1 == 0.0) continue;
    for (int ka = 0; ka < k; ++ka)
      for (int kb = 0; kb < k; ++kb)
        num(ka, kb) += ar1 * st.phi(static_cast<Eigen::Index>(t), ka * k + kb);
  }

  Eigen::RowVectorXd su = p.u.colwise().sum();
  Eigen::RowVectorXd sv = p.v.colwise().sum();
  Eigen::MatrixXd den = su.transpose() * sv - p.u.transpose() * p.v;
  if (mask) den -= p.u.transpose() * held_row_sums(*mask, p.v);

  Eigen::MatrixXd out(k, k);
  for (int ka = 0; ka < k; ++ka)
    for (int kb = 0; kb < k; ++kb)
      out(ka, kb) = den(ka, kb) < epsilon ? 0.0 : num(ka, kb) / den(ka, kb);
  return out;
}

double m_step_eta(const CrepParams& p, const DirectedGraph& g,
                  const TrainMask* mask, double epsilon) {
  const long long m = trained_weight(g, mask);
  if (m == 0) throw data_error("eta update undefined: no observed weight");
  Eigen::MatrixXd uw = p.u * p.w;
  double sum = 0.0;
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    const Edge& edge = g.edges()[e];
    const long long arev = g.reverse_weight(e);
    if (arev == 0) continue;
    if (mask && !mask->trains(edge.src, edge.dst)) continue;
    const double lam = uw.row(edge.src).dot(p.v.row(edge.dst)) +
                       p.eta * static_cast<double>(arev);
    sum += static_cast<double>(edge.weight) * static_cast<double>(arev) /
           std::max(lam, epsilon);
  }
  return p.eta * sum / static_cast<double>(m);
}

CrepParams random_init(int n_nodes, int K, EmMode mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CrepParams p;
  p.k = K;
  p.u.resize(n_nodes, K);
  p.v.resize(n_nodes, K);
  p.w.resize(K, K);
  for (int i = 0; i < n_nodes; ++i)
    for (int a = 0; a < K; ++a) p.u(i, a) = unit(rng);
  for (int i = 0; i < n_nodes; ++i)
    for (int a = 0; a < K; ++a) p.v(i, a) = unit(rng);
  for (int a = 0; a < K; ++a)
    for (int b = 0; b < K; ++b) p.w(a, b) = unit(rng);
  if (mode != EmMode::unconstrained) {
    for (int i = 0; i < n_nodes; ++i) {
      p.u.row(i) /= p.u.row(i).sum();
      p.v.row(i) /= p.v.row(i).sum();
    }
  }
  if (mode == EmMode::eta_zero) {
    p.eta = 0.0;
  } else {
    std::uniform_real_distribution<double> eta_draw(0.05, 0.95);
    p.eta = eta_draw(rng);
  }
  return p;
}

namespace {

struct EmRun {
  CrepParams params;
  double lpl = -std::numeric_limits<double>::infinity();
  int n_iter = 0;
  std::vector<double> trace;
  bool ok = false;
};

EmRun run_em(const DirectedGraph& g, const EmConfig& cfg,
             const TrainMask* mask, const std::vector<std::size_t>& ids,
             CrepParams params) {
  EmRun run;
  VariationalState st;
  int streak = 0;
  double prev = std::numeric_limits<double>::quiet_NaN();
  int iter = 0;
  bool checked_last = false;
  while (iter < cfg.max_iter) {
    ++iter;
    e_step_ids(params, g, ids, cfg.epsilon, &st);
    params.u = m_step_memberships(params, st, g, Side::out, cfg.mode, mask,
                                  cfg.epsilon);
    e_step_ids(params, g, ids, cfg.epsilon, &st);
    params.v = m_step_memberships(params, st, g, Side::in, cfg.mode, mask,
                                  cfg.epsilon);
    e_step_ids(params, g, ids, cfg.epsilon, &st);
    params.w = m_step_affinity(params, st, g, mask, cfg.epsilon);
    if (cfg.mode != EmMode::eta_zero)
      params.eta = m_step_eta(params, g, mask, cfg.epsilon);

    checked_last = false;
    if (iter % cfg.check_every == 0) {
      const double cur = log_pseudo_likelihood(params, g, mask, cfg.epsilon);
      run.trace.push_back(cur);
      checked_last = true;
      if (!std::isfinite(cur)) {
        run.n_iter = iter;
        return run;  // ok stays false: restart discarded
      }
      if (std::isfinite(prev) && std::abs(cur - prev) < cfg.tol) {
        if (++streak >= cfg.patience) {
          prev = cur;
          break;
        }
      } else {
        streak = 0;
      }
      prev = cur;
    }
  }

  run.n_iter = iter;
  run.lpl = checked_last ? prev
                         : log_pseudo_likelihood(params, g, mask, cfg.epsilon);
  if (!checked_last) run.trace.push_back(run.lpl);
  run.params = std::move(params);
  run.ok = std::isfinite(run.lpl);
  return run;
}

}  // namespace

FitResult fit(const DirectedGraph& g, int K, const EmConfig& cfg,
              const TrainMask* mask, const CrepParams* init) {
  check_config(cfg);
  if (K < 1) throw data_error("K must be at least 1");
  if (g.n_nodes() < 2) throw data_error("graph needs at least 2 nodes");
  if (mask && mask->n_nodes() != g.n_nodes())
    throw data_error("mask node count does not match graph");
  if (trained_weight(g, mask) == 0)
    throw data_error("no observed weight on training pairs");
  if (init) {
    validate_params(*init);
    if (init->n_nodes() != g.n_nodes() || init->k != K)
      throw data_error("init shape does not match graph and K");
  }

  const std::vector<std::size_t> ids = covered_edges(g, mask);
  const int n_runs = init ? 1 : cfg.restarts;
  std::vector<EmRun> runs(n_runs);

  auto job = [&](int r) {
    CrepParams start = init ? *init
                            : random_init(g.n_nodes(), K, cfg.mode,
                                          cfg.seed + static_cast<std::uint64_t>(r));
    runs[r] = run_em(g, cfg, mask, ids, std::move(start));
  };

  const int workers = std::min(std::max(1, cfg.workers), n_runs);
  if (workers == 1) {
    for (int r = 0; r < n_runs; ++r) job(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < n_runs; r = next.fetch_add(1))
          job(r);
      });
    for (auto& t : pool) t.join();
  }

  int best = -1;
  int discarded = 0;
  for (int r = 0; r < n_runs; ++r) {
    if (!runs[r].ok) {
      ++discarded;
      continue;
    }
    if (best < 0 || runs[r].lpl > runs[best].lpl) best = r;
  }
  if (best < 0)
    throw numerical_error(
        "every restart produced a non-finite log-pseudo-likelihood");

  FitResult fr;
  fr.params = std::move(runs[best].params);
  fr.final_lpl = runs[best].lpl;
  fr.n_iter = runs[best].n_iter;
  fr.restart_index = best;
  fr.lpl_trace = std::move(runs[best].trace);
  fr.discarded_restarts = discarded;
  return fr;
}

nlohmann::json em_config_to_json(const EmConfig& cfg) {
  nlohmann::json doc;
  doc["mode"] = to_string(cfg.mode);
  doc["max_iter"] = cfg.max_iter;
  doc["tol"] = cfg.tol;
  doc["check_every"] = cfg.check_every;
  doc["patience"] = cfg.patience;
  doc["restarts"] = cfg.restarts;
  doc["seed"] = cfg.seed;
  doc["epsilon"] = cfg.epsilon;
  doc["workers"] = cfg.workers;
  return doc;
}

EmConfig em_config_from_json(const nlohmann::json& doc) {
  EmConfig cfg;
  cfg.mode = em_mode_from_string(doc.value("mode", "constrained"));
  cfg.max_iter = doc.value("max_iter", cfg.max_iter);
  cfg.tol = doc.value("tol", cfg.tol);
  cfg.check_every = doc.value("check_every", cfg.check_every);
  cfg.patience = doc.value("patience", cfg.patience);
  cfg.restarts = doc.value("restarts", cfg.restarts);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.epsilon = doc.value("epsilon", cfg.epsilon);
  cfg.workers = doc.value("workers", cfg.workers);
  return cfg;
}

nlohmann::json fit_to_json(const FitResult& fr,
                           const std::vector<std::string>& labels,
                           const EmConfig& cfg) {
  nlohmann::json doc = params_to_json(fr.params, labels, false);
  doc["format"] = "crep-fit";
  doc["final_lpl"] = fr.final_lpl;
  doc["n_iter"] = fr.n_iter;
  doc["restart_index"] = fr.restart_index;
  doc["discarded_restarts"] = fr.discarded_restarts;
  doc["lpl_trace"] = fr.lpl_trace;
  doc["config"] = em_config_to_json(cfg);
  return doc;
}

FitResult fit_from_json(const nlohmann::json& doc) {
  FitResult fr;
  fr.params = params_from_json(doc);
  fr.final_lpl = doc.value("final_lpl", 0.0);
  fr.n_iter = doc.value("n_iter", 0);
  fr.restart_index = doc.value("restart_index", 0);
  fr.discarded_restarts = doc.value("discarded_restarts", 0);
  if (doc.contains("lpl_trace"))
    fr.lpl_trace = doc.at("lpl_trace").get<std::vector<double>>();
  return fr;
}

}  // namespace crep
