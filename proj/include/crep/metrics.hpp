#pragma once

#include <string>
#include <utility>
#include <vector>

#include "crep/graph.hpp"
#include "crep/params.hpp"

namespace crep {

// Per-edge community/reciprocity split: cr_ij = lambda^0_ij / m_ij is the
// expected fraction of the weight on (i, j) produced by community
// structure; d_ij = cr_ij - cr_ji is antisymmetric.
struct EdgeDecomposition {
  double cr_ij = 0.0;
  double cr_ji = 0.0;
  double d_ij = 0.0;
};

struct ScoredPair {
  int i = 0;
  int j = 0;
  long long truth = 0;
  double score = 0.0;
};

enum class ScoreKind { regular, conditional };
enum class SecondMoment { poisson, bernoulli };

// Fraction of directed edges whose reverse edge also exists.
double reciprocity(const DirectedGraph& g);

// r_w = sum A_ij A_ji / sum A_ij; equals reciprocity on binary graphs.
double weighted_reciprocity(const DirectedGraph& g);

// Model expectation of r_w: eta + sum(lambda^0_ij m_ji + eta m_ji^2) /
// sum m_ij under the Poisson second moment (default); the Bernoulli
// option drops the eta m_ji^2 term. Always >= eta.
double expected_weighted_reciprocity(
    const CrepParams& p, SecondMoment moment = SecondMoment::poisson);

// Expected fraction of total weight generated by community structure,
// 1 - eta; equivalently sum lambda^0 / E[M].
double cr_ratio(const CrepParams& p);

EdgeDecomposition edge_decomposition(const CrepParams& p, int i, int j);

// Exact Mann-Whitney AUC with 0.5 credit for ties; positives are pairs
// with truth > 0.
double auc(const std::vector<ScoredPair>& scored);

// regular: score m_ij; conditional: score lambda^0_ij + eta * A_ji with
// A_ji read from the full observed graph.
std::vector<ScoredPair> score_pairs(const CrepParams& p,
                                    const DirectedGraph& g,
                                    const std::vector<std::pair<int, int>>& pairs,
                                    ScoreKind kind);

// Mean over nodes of the cosine between true and inferred membership rows,
// maximized over column permutations of the inferred matrix (exhaustive
// for K <= 8, greedy above). Zero rows contribute 0.
double cosine_similarity(const Eigen::MatrixXd& truth,
                         const Eigen::MatrixXd& inferred);

// Average per-community F1 of argmax hard labels (ties break to the lowest
// index) under the best column permutation.
double f1_hard(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& inferred);

struct MetricRecord {
  std::string name;
  double value = 0.0;
  std::string provenance;
};

// Flat `name value` lines, 6 significant digits.
std::string format_metrics_text(const std::vector<MetricRecord>& records);
nlohmann::json metrics_to_json(const std::vector<MetricRecord>& records);

}  // namespace crep
