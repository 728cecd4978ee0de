#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crep/evaluation.hpp"

namespace {

struct EmFlags {
  std::string mode = "constrained";
  int restarts = 10;
  int max_iter = 1000;
  int check_every = 10;
  int patience = 3;
  int workers = 1;
  double tol = 1e-4;
  double epsilon = 1e-12;
  std::string seed = "42";
};

const CLI::Validator seed_validator(
    [](std::string& s) -> std::string {
      if (s == "random") return {};
      try {
        std::size_t pos = 0;
        (void)std::stoull(s, &pos);
        if (pos != s.size())
          return "seed must be an unsigned integer or 'random'";
      } catch (...) {
        return "seed must be an unsigned integer or 'random'";
      }
      return {};
    },
    "SEED");

std::uint64_t resolve_seed(const std::string& s) {
  if (s == "random") {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  return std::stoull(s);
}

void add_em_flags(CLI::App* cmd, EmFlags* f) {
  cmd->add_option("--mode", f->mode, "inference mode")
      ->check(CLI::IsMember({"constrained", "unconstrained", "eta0"}))
      ->capture_default_str();
  cmd->add_option("--restarts", f->restarts, "random initializations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--max-iter", f->max_iter, "EM iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--tol", f->tol, "convergence threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--check-every", f->check_every,
                  "iterations between convergence checks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--patience", f->patience,
                  "consecutive passing checks required")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--epsilon", f->epsilon, "rate floor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--workers", f->workers, "concurrent jobs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", f->seed, "RNG seed or 'random'")
      ->check(seed_validator)
      ->capture_default_str();
}

crep::EmConfig build_config(const EmFlags& f) {
  crep::EmConfig cfg;
  cfg.mode = crep::em_mode_from_string(f.mode);
  cfg.restarts = f.restarts;
  cfg.max_iter = f.max_iter;
  cfg.tol = f.tol;
  cfg.check_every = f.check_every;
  cfg.patience = f.patience;
  cfg.epsilon = f.epsilon;
  cfg.workers = f.workers;
  cfg.seed = resolve_seed(f.seed);
  return cfg;
}

crep::DirectedGraph load_graph(const std::string& path, bool run_preprocess) {
  crep::LoadStats stats;
  crep::DirectedGraph g = crep::load_edge_list_file(path, &stats);
  if (stats.self_loops_dropped > 0)
    std::cerr << "warning: dropped " << stats.self_loops_dropped
              << " self-loop record(s)\n";
  if (run_preprocess) {
    crep::PreprocessStats ps;
    g = crep::preprocess(g, &ps);
    if (ps.nodes_removed_degree + ps.nodes_removed_component > 0)
      std::cerr << "preprocess: removed " << ps.nodes_removed_degree
                << " node(s) lacking in/out edges, "
                << ps.nodes_removed_component
                << " outside the giant component\n";
  }
  return g;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw crep::data_error("cannot open output file: " + path);
  out << text;
  if (!out) throw crep::data_error("failed writing: " + path);
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

std::vector<int> parse_k_grid(const std::string& text) {
  std::vector<int> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      const int k = std::stoi(item, &pos);
      if (pos != item.size() || k < 1) throw std::invalid_argument(item);
      grid.push_back(k);
    } catch (...) {
      throw crep::data_error("bad K grid entry: `" + item + "`");
    }
  }
  if (grid.empty()) throw crep::data_error("K grid is empty");
  return grid;
}

void setup_fit(CLI::App& app) {
  auto* cmd = app.add_subcommand("fit", "Fit the model to an edge list");
  auto graph_path = std::make_shared<std::string>();
  auto k = std::make_shared<int>(0);
  auto flags = std::make_shared<EmFlags>();
  auto out_path = std::make_shared<std::string>();
  auto run_preprocess = std::make_shared<bool>(false);

  cmd->add_option("graph", *graph_path, "edge-list file")->required();
  cmd->add_option("--k", *k, "community count")
      ->required()
      ->check(CLI::PositiveNumber);
  add_em_flags(cmd, flags.get());
  cmd->add_flag("--preprocess", *run_preprocess,
                "drop nodes lacking in/out edges, keep giant component");
  cmd->add_option("--out", *out_path, "write the fit document here");

  cmd->callback([graph_path, k, flags, out_path, run_preprocess] {
    const crep::EmConfig cfg = build_config(*flags);
    const crep::DirectedGraph g = load_graph(*graph_path, *run_preprocess);
    const crep::FitResult fr = crep::fit(g, *k, cfg);
    if (fr.discarded_restarts > 0)
      std::cerr << "warning: discarded " << fr.discarded_restarts
                << " restart(s) with non-finite objective\n";
    std::cout << "eta_hat " << fr.params.eta << '\n'
              << "final_lpl " << fr.final_lpl << '\n'
              << "n_iter " << fr.n_iter << '\n'
              << "cr_ratio " << crep::cr_ratio(fr.params) << '\n';
    if (!out_path->empty())
      write_json_file(*out_path, crep::fit_to_json(fr, g.labels(), cfg));
  });
}

void setup_generate(CLI::App& app) {
  auto* cmd = app.add_subcommand("generate", "Sample a synthetic network");
  auto kind = std::make_shared<std::string>();
  auto n = std::make_shared<int>(0);
  auto seed = std::make_shared<std::string>("42");
  auto out_prefix = std::make_shared<std::string>();
  auto k = std::make_shared<int>(3);
  auto avg_degree = std::make_shared<double>(20.0);
  auto eta = std::make_shared<double>(0.0);
  auto overlap = std::make_shared<double>(0.0);
  auto dir_alpha = std::make_shared<double>(0.1);
  auto expected_edges = std::make_shared<double>(0.0);
  auto theta = std::make_shared<double>(0.0);
  auto p_single = std::make_shared<double>(0.002);
  auto hl_alpha = std::make_shared<double>(0.0);
  auto theta_opt = cmd->add_option("--theta", *theta, "HL density parameter");

  cmd->add_option("--kind", *kind, "benchmark | sbm | hl")
      ->required()
      ->check(CLI::IsMember({"benchmark", "sbm", "hl"}));
  cmd->add_option("--n", *n, "node count")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", *seed, "RNG seed or 'random'")
      ->check(seed_validator)
      ->capture_default_str();
  cmd->add_option("--out", *out_prefix,
                  "output prefix (writes PREFIX.edges.txt, PREFIX.truth.json)")
      ->required();
  cmd->add_option("--k", *k, "planted communities")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--avg-degree", *avg_degree, "target average degree")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--eta", *eta, "reciprocity parameter, in [0,1)")
      ->capture_default_str();
  cmd->add_option("--overlap", *overlap, "fraction of mixed-membership nodes")
      ->capture_default_str();
  cmd->add_option("--dirichlet-alpha", *dir_alpha,
                  "concentration for mixed rows")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--expected-edges", *expected_edges,
                  "target E[M]; default avg_degree * n");
  cmd->add_option("--p-single", *p_single,
                  "HL single-edge probability (when --theta is absent)")
      ->capture_default_str();
  cmd->add_option("--alpha", *hl_alpha, "HL reciprocity coupling")
      ->capture_default_str();

  cmd->callback([kind, n, seed, out_prefix, k, avg_degree, eta, overlap,
                 dir_alpha, expected_edges, theta, p_single, hl_alpha,
                 theta_opt] {
    const std::uint64_t seed_val = resolve_seed(*seed);
    crep::DirectedGraph g;
    nlohmann::json truth_doc;
    if (*kind == "hl") {
      const double th = theta_opt->count()
                            ? *theta
                            : crep::theta_from_density(*p_single, *hl_alpha);
      g = crep::sample_hl(*n, th, *hl_alpha, seed_val);
      crep::HLParams hl{th, *hl_alpha};
      truth_doc = {{"format", "crep-hl-truth"},
                   {"version", 1},
                   {"n_nodes", *n},
                   {"theta", th},
                   {"alpha", *hl_alpha},
                   {"z", hl.z()},
                   {"p_null", hl.p_null()},
                   {"p_single", hl.p_single()},
                   {"p_mutual", hl.p_mutual()},
                   {"expected_reciprocity", hl.expected_reciprocity()},
                   {"seed", seed_val}};
    } else {
      crep::PlantedConfig pc;
      pc.n_nodes = *n;
      pc.k = *k;
      pc.avg_degree = *avg_degree;
      pc.eta = *kind == "sbm" ? 0.0 : *eta;
      pc.overlap = *overlap;
      pc.dirichlet_alpha = *dir_alpha;
      pc.expected_edges = *expected_edges;
      pc.seed = seed_val;
      const crep::CrepParams truth = crep::build_planted_params(pc);
      g = crep::sample_benchmark(truth, pc.target_edges(), seed_val);
      truth_doc = crep::params_to_json(truth, g.labels(), true);
      truth_doc["planted"] = {{"n_nodes", pc.n_nodes},
                              {"k", pc.k},
                              {"avg_degree", pc.avg_degree},
                              {"eta", pc.eta},
                              {"overlap", pc.overlap},
                              {"dirichlet_alpha", pc.dirichlet_alpha},
                              {"expected_edges", pc.target_edges()},
                              {"seed", pc.seed}};
    }

    crep::save_edge_list_file(g, *out_prefix + ".edges.txt");
    write_json_file(*out_prefix + ".truth.json", truth_doc);
    std::cout << "m " << g.total_weight() << '\n'
              << "r " << crep::reciprocity(g) << '\n'
              << "r_w " << crep::weighted_reciprocity(g) << '\n';
  });
}

void setup_predict(CLI::App& app) {
  auto* cmd = app.add_subcommand("predict", "Score a pair list from a fit");
  auto fit_path = std::make_shared<std::string>();
  auto graph_path = std::make_shared<std::string>();
  auto pairs_path = std::make_shared<std::string>();
  auto kind = std::make_shared<std::string>("regular");
  auto out_path = std::make_shared<std::string>();

  cmd->add_option("fit", *fit_path, "fit document")->required();
  cmd->add_option("--graph", *graph_path, "edge-list file")->required();
  cmd->add_option("--pairs", *pairs_path, "file of `src dst` pairs")
      ->required();
  cmd->add_option("--kind", *kind, "score kind")
      ->check(CLI::IsMember({"regular", "conditional"}))
      ->capture_default_str();
  cmd->add_option("--out", *out_path, "write scores here instead of stdout");

  cmd->callback([fit_path, graph_path, pairs_path, kind, out_path] {
    std::ifstream in(*fit_path);
    if (!in) throw crep::data_error("cannot open fit document: " + *fit_path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw crep::data_error("bad fit document " + *fit_path + ": " +
                             e.what());
    }
    const crep::FitResult fr = crep::fit_from_json(doc);

    const crep::DirectedGraph g = load_graph(*graph_path, false);
    if (fr.params.n_nodes() != g.n_nodes())
      throw crep::data_error("fit document and graph disagree on node count");

    std::unordered_map<std::string, int> index;
    for (int i = 0; i < g.n_nodes(); ++i) index[g.label(i)] = i;

    std::ifstream pin(*pairs_path);
    if (!pin) throw crep::data_error("cannot open pair list: " + *pairs_path);
    std::vector<std::pair<int, int>> pairs;
    std::string line;
    long long line_no = 0;
    while (std::getline(pin, line)) {
      ++line_no;
      for (char& c : line)
        if (c == ',') c = ' ';
      std::istringstream fields(line);
      std::string a, b;
      if (!(fields >> a)) continue;
      if (a[0] == '#') continue;
      std::string extra;
      if (!(fields >> b) || (fields >> extra))
        throw crep::data_error("pair list line " + std::to_string(line_no) +
                               ": expected `src dst`");
      const auto ia = index.find(a);
      const auto ib = index.find(b);
      if (ia == index.end() || ib == index.end())
        throw crep::data_error("pair list line " + std::to_string(line_no) +
                               ": unknown node label");
      pairs.emplace_back(ia->second, ib->second);
    }
    if (pairs.empty()) throw crep::data_error("pair list is empty");

    const auto scored = crep::score_pairs(
        fr.params, g, pairs,
        *kind == "regular" ? crep::ScoreKind::regular
                           : crep::ScoreKind::conditional);

    std::ostringstream lines;
    lines << "# kind " << *kind << "\n# fit " << *fit_path << "\n# graph "
          << *graph_path << '\n';
    for (const crep::ScoredPair& s : scored)
      lines << g.label(s.i) << ' ' << g.label(s.j) << ' ' << s.truth << ' '
            << s.score << '\n';

    if (out_path->empty()) {
      std::cout << lines.str();
    } else {
      write_text_file(*out_path, lines.str());
      std::cout << "pairs " << scored.size() << '\n';
      try {
        std::cout << "auc " << crep::auc(scored) << '\n';
      } catch (const crep::data_error&) {
        std::cout << "auc undefined (single-class pair list)\n";
      }
    }
  });
}

void setup_cv(CLI::App& app) {
  auto* cmd =
      app.add_subcommand("cv", "Cross-validated edge prediction over a K grid");
  auto graph_path = std::make_shared<std::string>();
  auto k_grid = std::make_shared<std::string>("2,3,4,5,6,7,8,9,10");
  auto folds = std::make_shared<int>(5);
  auto flags = std::make_shared<EmFlags>();
  auto out_path = std::make_shared<std::string>();
  auto run_preprocess = std::make_shared<bool>(false);

  cmd->add_option("graph", *graph_path, "edge-list file")->required();
  cmd->add_option("--k-grid", *k_grid, "comma-separated community counts")
      ->capture_default_str();
  cmd->add_option("--folds", *folds, "fold count")
      ->check(CLI::Range(2, 65535))
      ->capture_default_str();
  add_em_flags(cmd, flags.get());
  cmd->add_flag("--preprocess", *run_preprocess,
                "drop nodes lacking in/out edges, keep giant component");
  cmd->add_option("--out", *out_path, "write the CV report here");

  cmd->callback([graph_path, k_grid, folds, flags, out_path, run_preprocess] {
    const crep::EmConfig cfg = build_config(*flags);
    const crep::DirectedGraph g = load_graph(*graph_path, *run_preprocess);
    const crep::CvReport report =
        crep::cross_validate(g, parse_k_grid(*k_grid), cfg, *folds, cfg.seed);
    for (const crep::CvCell& cell : report.cells)
      if (!cell.valid)
        std::cerr << "warning: K=" << cell.k << " " << cell.note
                  << " (fold excluded)\n";
    std::cout << crep::format_cv_table(report);
    for (const crep::CvKSummary& s : report.per_k)
      if (s.k == report.winning_k) {
        std::cout << "winning_k " << s.k << '\n'
                  << "auc_regular " << s.mean_auc_regular << '\n'
                  << "auc_conditional " << s.mean_auc_conditional << '\n';
        break;
      }
    if (!out_path->empty())
      write_json_file(*out_path, crep::cv_report_to_json(report));
  });
}

void setup_report(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "report", "Fit, then sample replicas and compare reciprocity");
  auto graph_path = std::make_shared<std::string>();
  auto k = std::make_shared<int>(0);
  auto samples = std::make_shared<int>(5);
  auto flags = std::make_shared<EmFlags>();
  auto out_path = std::make_shared<std::string>();
  auto run_preprocess = std::make_shared<bool>(false);

  cmd->add_option("graph", *graph_path, "edge-list file")->required();
  cmd->add_option("--k", *k, "community count")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--samples", *samples, "generated sample count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_em_flags(cmd, flags.get());
  cmd->add_flag("--preprocess", *run_preprocess,
                "drop nodes lacking in/out edges, keep giant component");
  cmd->add_option("--out", *out_path, "write the recovery report here");

  cmd->callback([graph_path, k, samples, flags, out_path, run_preprocess] {
    const crep::EmConfig cfg = build_config(*flags);
    const crep::DirectedGraph g = load_graph(*graph_path, *run_preprocess);
    const crep::RecoveryReport report =
        crep::recovery_report(g, *k, cfg, *samples, cfg.seed);
    std::cout << crep::format_recovery_table(report);
    if (!out_path->empty())
      write_json_file(*out_path, crep::recovery_report_to_json(report));
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CRep: joint community and reciprocity models for directed "
               "weighted networks"};
  app.require_subcommand(1);
  setup_fit(app);
  setup_generate(app);
  setup_predict(app);
  setup_cv(app);
  setup_report(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const crep::data_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const crep::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
