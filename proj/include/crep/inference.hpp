#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crep/graph.hpp"
#include "crep/params.hpp"

namespace crep {

enum class EmMode { constrained, unconstrained, eta_zero };
enum class Side { out, in };

std::string to_string(EmMode mode);
EmMode em_mode_from_string(const std::string& s);

struct EmConfig {
  EmMode mode = EmMode::constrained;
  int max_iter = 1000;
  double tol = 1e-4;       // absolute threshold on the objective change
  int check_every = 10;    // iterations between convergence checks
  int patience = 3;        // consecutive passing checks required
  int restarts = 10;
  std::uint64_t seed = 42;
  double epsilon = 1e-12;  // floor for rates in logs and denominators
  int workers = 1;         // concurrent restarts; merge is deterministic
};

// Auxiliary distributions of the E-step, stored only for trained pairs with
// A_ij > 0. Row e of phi is the K*K table phi_ijkq flattened as k*K + q.
struct VariationalState {
  int k = 0;
  std::vector<std::size_t> edge_ids;  // indices into g.edges()
  Eigen::VectorXd rho1;
  Eigen::VectorXd rho2;
  Eigen::MatrixXd phi;
};

struct FitResult {
  CrepParams params;
  double final_lpl = 0.0;
  int n_iter = 0;
  int restart_index = 0;
  std::vector<double> lpl_trace;   // objective at each convergence check
  int discarded_restarts = 0;      // restarts dropped for non-finite values
};

// lambda^0_ij = sum_{k,q} u_ik w_kq v_jq; the full conditional rate is
// lambda_ij = lambda^0_ij + eta * A_ji, formed by the caller.
double lambda0(const CrepParams& p, int i, int j);

// sum_{i != j} lambda^0_ij, computed as s_u^T W s_v - sum_i u_i^T W v_i.
double lambda0_offdiag_sum(const CrepParams& p);

// Log-pseudo-likelihood sum_{(i,j)} (A_ij log lambda_ij - lambda_ij) over
// ordered non-diagonal pairs; with a mask, only trained pairs contribute to
// both terms. The rate inside the log is floored at epsilon.
double log_pseudo_likelihood(const CrepParams& p, const DirectedGraph& g,
                             const TrainMask* mask = nullptr,
                             double epsilon = 1e-12);

// rho1 = lambda^0/lambda, rho2 = eta*A_ji/lambda, phi_kq = u_ik w_kq v_jq /
// lambda^0. Degenerate denominators: lambda < epsilon sets rho1 = 1 and
// rho2 = 0; lambda^0 < epsilon sets phi uniform at 1/K^2.
VariationalState e_step(const CrepParams& p, const DirectedGraph& g,
                        const TrainMask* mask = nullptr,
                        double epsilon = 1e-12);

// Evaluates the variational lower bound exactly, with 0 log 0 := 0. Equals
// log_pseudo_likelihood when state comes from e_step at the same params.
double variational_objective(const CrepParams& p, const VariationalState& state,
                             const DirectedGraph& g,
                             const TrainMask* mask = nullptr);

// Closed-form membership update for one side. Returns the new u (side out)
// or v (side in); rows with zero numerator become zero. Constrained mode
// normalizes rows to unit sum; unconstrained mode divides by the per-entry
// normalizer derived from stationarity of the bound.
Eigen::MatrixXd m_step_memberships(const CrepParams& p,
                                   const VariationalState& state,
                                   const DirectedGraph& g, Side side,
                                   EmMode mode,
                                   const TrainMask* mask = nullptr,
                                   double epsilon = 1e-12);

// w_kq = sum A_ij rho1 phi_kq / [ (sum_i u_ik)(sum_j v_jq) - sum_i u_ik v_iq
// - held-out pairs ]; denominators below epsilon zero the entry.
Eigen::MatrixXd m_step_affinity(const CrepParams& p,
                                const VariationalState& state,
                                const DirectedGraph& g,
                                const TrainMask* mask = nullptr,
                                double epsilon = 1e-12);

// eta' = (eta / M) sum_{A_ij A_ji > 0} A_ij A_ji / lambda_ij over trained
// pairs, with M the trained total weight. Throws when M = 0.
double m_step_eta(const CrepParams& p, const DirectedGraph& g,
                  const TrainMask* mask = nullptr, double epsilon = 1e-12);

// Uniform(0,1) entries for u, v, w (rows normalized in constrained mode),
// eta uniform on (0.05, 0.95), or 0 in eta_zero mode.
CrepParams random_init(int n_nodes, int K, EmMode mode, std::uint64_t seed);

// Runs EM from cfg.restarts random initializations (seeded seed + r) and
// returns the restart with the highest log-pseudo-likelihood. When init is
// given it replaces the random starts and a single run is performed.
FitResult fit(const DirectedGraph& g, int K, const EmConfig& cfg,
              const TrainMask* mask = nullptr,
              const CrepParams* init = nullptr);

nlohmann::json em_config_to_json(const EmConfig& cfg);
EmConfig em_config_from_json(const nlohmann::json& doc);

nlohmann::json fit_to_json(const FitResult& fr,
                           const std::vector<std::string>& labels,
                           const EmConfig& cfg);
FitResult fit_from_json(const nlohmann::json& doc);

}  // namespace crep
