#include "crep/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "crep/random.hpp"

namespace crep {

namespace {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

// Runs jobs 0..n-1 on up to `workers` threads; rethrows the first failure
// by job index so errors are deterministic.
void run_jobs(int n, int workers,
              const std::function<void(int)>& job) {
  workers = std::min(std::max(1, workers), n);
  if (workers == 1) {
    for (int t = 0; t < n; ++t) job(t);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int t = next.fetch_add(1); t < n; t = next.fetch_add(1)) {
        try {
          job(t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (int t = 0; t < n; ++t)
    if (errors[t]) std::rethrow_exception(errors[t]);
}

}  // namespace

std::vector<int> default_k_grid() { return {2, 3, 4, 5, 6, 7, 8, 9, 10}; }

CvReport cross_validate(const DirectedGraph& g, const std::vector<int>& k_grid,
                        const EmConfig& cfg, int fold_count,
                        std::uint64_t seed) {
  if (k_grid.empty()) throw data_error("K grid must be nonempty");
  const FoldMask folds = make_folds(g, fold_count, seed);

  CvReport report;
  report.k_grid = k_grid;
  report.fold_count = fold_count;
  report.seed = seed;
  report.cfg = cfg;
  const int n_cells = static_cast<int>(k_grid.size()) * fold_count;
  report.cells.resize(n_cells);

  EmConfig inner = cfg;
  inner.workers = 1;  // cells are the unit of parallelism

  run_jobs(n_cells, cfg.workers, [&](int t) {
    const int ki = t / fold_count;
    const int fold = t % fold_count;
    CvCell cell;
    cell.k = k_grid[ki];
    cell.fold = fold;

    const TrainMask mask = hold_out_fold(folds, fold);
    const FitResult fr = fit(g, cell.k, inner, &mask);
    cell.eta_hat = fr.params.eta;
    cell.final_lpl = fr.final_lpl;
    cell.n_iter = fr.n_iter;

    const auto held = pairs_in_fold(folds, fold);
    try {
      cell.auc_regular =
          auc(score_pairs(fr.params, g, held, ScoreKind::regular));
      cell.auc_conditional =
          auc(score_pairs(fr.params, g, held, ScoreKind::conditional));
    } catch (const data_error& e) {
      cell.valid = false;
      cell.note = "fold " + std::to_string(fold) + ": " + e.what();
    }
    report.cells[t] = std::move(cell);
  });

  for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
    CvKSummary s;
    s.k = k_grid[ki];
    std::vector<double> reg, cond;
    for (int f = 0; f < fold_count; ++f) {
      const CvCell& cell = report.cells[ki * fold_count + f];
      if (!cell.valid) continue;
      reg.push_back(cell.auc_regular);
      cond.push_back(cell.auc_conditional);
    }
    s.valid_folds = static_cast<int>(reg.size());
    const MeanSd r = mean_sd(reg);
    const MeanSd c = mean_sd(cond);
    s.mean_auc_regular = r.mean;
    s.sd_auc_regular = r.sd;
    s.mean_auc_conditional = c.mean;
    s.sd_auc_conditional = c.sd;
    report.per_k.push_back(s);
  }

  int best = -1;
  for (std::size_t ki = 0; ki < report.per_k.size(); ++ki) {
    if (report.per_k[ki].valid_folds == 0) continue;
    if (best < 0 || report.per_k[ki].mean_auc_regular >
                        report.per_k[best].mean_auc_regular)
      best = static_cast<int>(ki);
  }
  if (best < 0)
    throw data_error("every cross-validation fold was invalid");
  report.winning_k = report.per_k[best].k;
  return report;
}

RecoveryReport recovery_report(const DirectedGraph& g, int k,
                               const EmConfig& cfg, int n_samples,
                               std::uint64_t seed) {
  if (n_samples < 1) throw data_error("sample count must be at least 1");

  RecoveryReport report;
  report.k = k;
  report.cfg = cfg;
  report.n_samples = n_samples;
  report.sample_seed = seed;
  const DegreeSummary deg = degree_stats(g);
  report.input_m = deg.total_weight;
  report.input_edges = deg.n_edges;
  report.input_avg_degree = deg.avg_degree;
  report.input_r = reciprocity(g);
  report.input_rw = weighted_reciprocity(g);

  const FitResult fr = fit(g, k, cfg);
  report.eta_hat = fr.params.eta;
  report.final_lpl = fr.final_lpl;
  report.n_iter = fr.n_iter;

  const double target = static_cast<double>(report.input_m);
  CrepParams scaled = fr.params;
  scaled.w *= sparsity_constant(fr.params, target);
  report.expected_rw = expected_weighted_reciprocity(scaled);

  for (int s = 0; s < n_samples; ++s) {
    const DirectedGraph gs = sample_benchmark(
        fr.params, target, derive_stream(seed, 0x7265636f76ULL,
                                         static_cast<std::uint64_t>(s)));
    report.sample_m.push_back(gs.total_weight());
    report.sample_r.push_back(reciprocity(gs));
    report.sample_rw.push_back(weighted_reciprocity(gs));
  }
  const MeanSd r = mean_sd(report.sample_r);
  const MeanSd rw = mean_sd(report.sample_rw);
  report.mean_r = r.mean;
  report.sd_r = r.sd;
  report.mean_rw = rw.mean;
  report.sd_rw = rw.sd;
  return report;
}

PlantedRecovery planted_recovery(const PlantedConfig& cfg,
                                 const EmConfig& emcfg) {
  PlantedRecovery out;
  out.planted = cfg;

  const CrepParams truth = build_planted_params(cfg);
  const DirectedGraph g =
      sample_benchmark(truth, cfg.target_edges(), cfg.seed);
  out.graph_m = g.total_weight();
  out.graph_r = reciprocity(g);
  out.graph_rw = weighted_reciprocity(g);

  const FitResult fr = fit(g, cfg.k, emcfg);
  out.eta_hat = fr.params.eta;
  out.abs_eta_err = std::abs(fr.params.eta - cfg.eta);
  out.final_lpl = fr.final_lpl;
  out.cosine_u = cosine_similarity(truth.u, fr.params.u);
  out.cosine_v = cosine_similarity(truth.v, fr.params.v);
  out.f1_u = f1_hard(truth.u, fr.params.u);
  out.f1_v = f1_hard(truth.v, fr.params.v);

  // Random-membership baseline: Dirichlet(0.1) rows scored against the
  // truth, averaged over a fixed number of draws.
  const int n_draws = 10;
  double baseline = 0.0;
  for (int d = 0; d < n_draws; ++d) {
    std::mt19937_64 rng(derive_stream(emcfg.seed, 0xba5eULL,
                                      static_cast<std::uint64_t>(d)));
    std::gamma_distribution<double> gamma(0.1, 1.0);
    Eigen::MatrixXd rand_u(cfg.n_nodes, cfg.k);
    for (int i = 0; i < cfg.n_nodes; ++i) {
      double sum = 0.0;
      for (int a = 0; a < cfg.k; ++a) {
        rand_u(i, a) = gamma(rng);
        sum += rand_u(i, a);
      }
      if (sum < 1e-300)
        rand_u.row(i).setConstant(1.0 / cfg.k);
      else
        rand_u.row(i) /= sum;
    }
    baseline += cosine_similarity(truth.u, rand_u);
  }
  out.baseline_cosine = baseline / n_draws;
  return out;
}

nlohmann::json cv_report_to_json(const CvReport& report) {
  nlohmann::json doc;
  doc["format"] = "crep-cv";
  doc["version"] = 1;
  doc["k_grid"] = report.k_grid;
  doc["fold_count"] = report.fold_count;
  doc["seed"] = report.seed;
  doc["config"] = em_config_to_json(report.cfg);
  nlohmann::json cells = nlohmann::json::array();
  for (const CvCell& c : report.cells) {
    nlohmann::json cell;
    cell["k"] = c.k;
    cell["fold"] = c.fold;
    cell["valid"] = c.valid;
    cell["auc_regular"] = c.auc_regular;
    cell["auc_conditional"] = c.auc_conditional;
    cell["eta_hat"] = c.eta_hat;
    cell["final_lpl"] = c.final_lpl;
    cell["n_iter"] = c.n_iter;
    if (!c.note.empty()) cell["note"] = c.note;
    cells.push_back(std::move(cell));
  }
  doc["cells"] = std::move(cells);
  nlohmann::json per_k = nlohmann::json::array();
  for (const CvKSummary& s : report.per_k) {
    nlohmann::json row;
    row["k"] = s.k;
    row["valid_folds"] = s.valid_folds;
    row["mean_auc_regular"] = s.mean_auc_regular;
    row["sd_auc_regular"] = s.sd_auc_regular;
    row["mean_auc_conditional"] = s.mean_auc_conditional;
    row["sd_auc_conditional"] = s.sd_auc_conditional;
    per_k.push_back(std::move(row));
  }
  doc["per_k"] = std::move(per_k);
  doc["winning_k"] = report.winning_k;
  return doc;
}

nlohmann::json recovery_report_to_json(const RecoveryReport& report) {
  nlohmann::json doc;
  doc["format"] = "crep-recovery";
  doc["version"] = 1;
  doc["k"] = report.k;
  doc["config"] = em_config_to_json(report.cfg);
  doc["sample_seed"] = report.sample_seed;
  doc["input"] = {{"m", report.input_m},
                  {"n_edges", report.input_edges},
                  {"avg_degree", report.input_avg_degree},
                  {"r", report.input_r},
                  {"r_w", report.input_rw}};
  doc["eta_hat"] = report.eta_hat;
  doc["final_lpl"] = report.final_lpl;
  doc["n_iter"] = report.n_iter;
  doc["expected_rw"] = report.expected_rw;
  doc["n_samples"] = report.n_samples;
  doc["sample_m"] = report.sample_m;
  doc["sample_r"] = report.sample_r;
  doc["sample_rw"] = report.sample_rw;
  doc["mean_r"] = report.mean_r;
  doc["sd_r"] = report.sd_r;
  doc["mean_rw"] = report.mean_rw;
  doc["sd_rw"] = report.sd_rw;
  return doc;
}

nlohmann::json planted_recovery_to_json(const PlantedRecovery& report) {
  nlohmann::json doc;
  doc["format"] = "crep-planted-recovery";
  doc["version"] = 1;
  doc["planted"] = {{"n_nodes", report.planted.n_nodes},
                    {"k", report.planted.k},
                    {"avg_degree", report.planted.avg_degree},
                    {"eta", report.planted.eta},
                    {"overlap", report.planted.overlap},
                    {"dirichlet_alpha", report.planted.dirichlet_alpha},
                    {"expected_edges", report.planted.target_edges()},
                    {"seed", report.planted.seed}};
  doc["eta_hat"] = report.eta_hat;
  doc["abs_eta_err"] = report.abs_eta_err;
  doc["cosine_u"] = report.cosine_u;
  doc["cosine_v"] = report.cosine_v;
  doc["f1_u"] = report.f1_u;
  doc["f1_v"] = report.f1_v;
  doc["baseline_cosine"] = report.baseline_cosine;
  doc["final_lpl"] = report.final_lpl;
  doc["graph_m"] = report.graph_m;
  doc["graph_r"] = report.graph_r;
  doc["graph_rw"] = report.graph_rw;
  return doc;
}

std::string format_cv_table(const CvReport& report) {
  std::ostringstream out;
  out << "K    folds  auc_regular             auc_conditional\n";
  for (const CvKSummary& s : report.per_k) {
    out << std::left << std::setw(5) << s.k << std::setw(7) << s.valid_folds;
    std::ostringstream reg, cond;
    reg << s.mean_auc_regular << " +- " << s.sd_auc_regular;
    cond << s.mean_auc_conditional << " +- " << s.sd_auc_conditional;
    out << std::setw(24) << reg.str() << cond.str() << '\n';
  }
  out << "winning K: " << report.winning_k << '\n';
  return out.str();
}

std::string format_recovery_table(const RecoveryReport& report) {
  std::ostringstream out;
  out << "stat              input      samples(mean +- sd)\n";
  out << std::left << std::setw(18) << "r" << std::setw(11) << report.input_r
      << report.mean_r << " +- " << report.sd_r << '\n';
  out << std::left << std::setw(18) << "r_w" << std::setw(11)
      << report.input_rw << report.mean_rw << " +- " << report.sd_rw << '\n';
  out << "eta_hat " << report.eta_hat << ", expected r_w "
      << report.expected_rw << '\n';
  return out.str();
}

}  // namespace crep
