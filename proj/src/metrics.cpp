#include "crep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "crep/generators.hpp"
#include "crep/inference.hpp"

namespace crep {

double reciprocity(const DirectedGraph& g) {
  if (g.n_edges() == 0)
    throw data_error("reciprocity undefined on an empty graph");
  long long mutual = 0;
  for (std::size_t e = 0; e < g.n_edges(); ++e)
    if (g.reverse_weight(e) > 0) ++mutual;
  return static_cast<double>(mutual) / static_cast<double>(g.n_edges());
}

double weighted_reciprocity(const DirectedGraph& g) {
  if (g.total_weight() == 0)
    throw data_error("weighted reciprocity undefined: total weight is zero");
  double num = 0.0;
  for (std::size_t e = 0; e < g.n_edges(); ++e)
    num += static_cast<double>(g.edges()[e].weight) *
           static_cast<double>(g.reverse_weight(e));
  return num / static_cast<double>(g.total_weight());
}

double expected_weighted_reciprocity(const CrepParams& p,
                                     SecondMoment moment) {
  validate_params(p);
  if (p.eta >= 1)
    throw data_error("expected reciprocity needs eta < 1");
  const int n = p.n_nodes();
  const double eta = p.eta;
  const Eigen::MatrixXd uw = p.u * p.w;

  double sum_m = 0.0;
  double sum_cross = 0.0;  // lambda^0_ij * m_ji
  double sum_sq = 0.0;     // m_ji^2
  for (int i = 0; i < n; ++i) {
    // Row i of lambda^0 and of its transpose, one node at a time.
    Eigen::VectorXd fwd = p.v * uw.row(i).transpose();          // lambda^0_ij
    Eigen::VectorXd bwd = uw * p.v.row(i).transpose();          // lambda^0_ji
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double m_ij = (fwd(j) + eta * bwd(j)) / (1.0 - eta * eta);
      const double m_ji = (bwd(j) + eta * fwd(j)) / (1.0 - eta * eta);
      sum_m += m_ij;
      sum_cross += fwd(j) * m_ji;
      sum_sq += m_ji * m_ji;
    }
  }
  if (sum_m < 1e-12)
    throw numerical_error("expected reciprocity undefined: zero edge mass");
  const double second = moment == SecondMoment::poisson ? eta * sum_sq : 0.0;
  return eta + (sum_cross + second) / sum_m;
}

double cr_ratio(const CrepParams& p) {
  if (p.eta >= 1) throw data_error("cr_ratio needs eta < 1");
  return 1.0 - p.eta;
}

EdgeDecomposition edge_decomposition(const CrepParams& p, int i, int j) {
  const double m_ij = marginal_mean(p, i, j);
  const double m_ji = marginal_mean(p, j, i);
  if (m_ij <= 0 || m_ji <= 0)
    throw numerical_error("edge decomposition undefined: zero marginal mean");
  EdgeDecomposition d;
  d.cr_ij = lambda0(p, i, j) / m_ij;
  d.cr_ji = lambda0(p, j, i) / m_ji;
  d.d_ij = d.cr_ij - d.cr_ji;
  return d;
}

double auc(const std::vector<ScoredPair>& scored) {
  const std::size_t n = scored.size();
  std::size_t n_pos = 0;
  for (const ScoredPair& s : scored)
    if (s.truth > 0) ++n_pos;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw data_error(n_pos == 0 ? "AUC undefined: no positive pairs"
                                : "AUC undefined: no negative pairs");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].score < scored[b].score;
  });

  // Average ranks within tie groups, then the Mann-Whitney statistic.
  double rank_pos = 0.0;
  std::size_t t = 0;
  while (t < n) {
    std::size_t t2 = t;
    while (t2 + 1 < n &&
           scored[order[t2 + 1]].score == scored[order[t]].score)
      ++t2;
    const double avg_rank = 0.5 * (static_cast<double>(t + 1) +
                                   static_cast<double>(t2 + 1));
    for (std::size_t s = t; s <= t2; ++s)
      if (scored[order[s]].truth > 0) rank_pos += avg_rank;
    t = t2 + 1;
  }
  const double u_stat =
      rank_pos - 0.5 * static_cast<double>(n_pos) *
                     static_cast<double>(n_pos + 1);
  return u_stat / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<ScoredPair> score_pairs(const CrepParams& p,
                                    const DirectedGraph& g,
                                    const std::vector<std::pair<int, int>>& pairs,
                                    ScoreKind kind) {
  validate_params(p);
  if (kind == ScoreKind::regular && p.eta >= 1)
    throw data_error("regular scores need eta < 1");
  const Eigen::MatrixXd uw = p.u * p.w;
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= g.n_nodes() || j >= g.n_nodes() || i == j)
      throw data_error("scored pair out of range");
    ScoredPair s;
    s.i = i;
    s.j = j;
    s.truth = g.weight(i, j);
    const double l_ij = uw.row(i).dot(p.v.row(j));
    if (kind == ScoreKind::regular) {
      const double l_ji = uw.row(j).dot(p.v.row(i));
      s.score = (l_ij + p.eta * l_ji) / (1.0 - p.eta * p.eta);
    } else {
      s.score = l_ij + p.eta * static_cast<double>(g.weight(j, i));
    }
    out.push_back(s);
  }
  return out;
}

namespace {

// Best assignment of inferred columns to true columns: exhaustive for
// K <= 8, greedy matching above.
double best_permutation_score(const Eigen::MatrixXd& cost) {
  const int k = static_cast<int>(cost.rows());
  if (k <= 8) {
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (int a = 0; a < k; ++a) s += cost(a, perm[a]);
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<char> row_used(k, 0), col_used(k, 0);
  double total = 0.0;
  for (int step = 0; step < k; ++step) {
    double best = -std::numeric_limits<double>::infinity();
    int br = -1, bc = -1;
    for (int a = 0; a < k; ++a) {
      if (row_used[a]) continue;
      for (int b = 0; b < k; ++b) {
        if (col_used[b]) continue;
        if (cost(a, b) > best) {
          best = cost(a, b);
          br = a;
          bc = b;
        }
      }
    }
    row_used[br] = 1;
    col_used[bc] = 1;
    total += best;
  }
  return total;
}

void check_shapes(const Eigen::MatrixXd& truth,
                  const Eigen::MatrixXd& inferred) {
  if (truth.rows() != inferred.rows() || truth.cols() != inferred.cols())
    throw data_error("membership matrices must share their shape");
  if (truth.rows() == 0 || truth.cols() == 0)
    throw data_error("membership matrices must be nonempty");
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm > 0) out.row(i) /= norm;
  }
  return out;
}

std::vector<int> argmax_labels(const Eigen::MatrixXd& m) {
  std::vector<int> labels(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    int best = 0;
    for (Eigen::Index a = 1; a < m.cols(); ++a)
      if (m(i, a) > m(i, best)) best = static_cast<int>(a);
    labels[i] = best;
  }
  return labels;
}

}  // namespace

double cosine_similarity(const Eigen::MatrixXd& truth,
                         const Eigen::MatrixXd& inferred) {
  check_shapes(truth, inferred);
  const Eigen::MatrixXd a = normalize_rows(truth);
  const Eigen::MatrixXd b = normalize_rows(inferred);
  const Eigen::MatrixXd cost = a.transpose() * b;  // K x K
  return best_permutation_score(cost) / static_cast<double>(truth.rows());
}

double f1_hard(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& inferred) {
  check_shapes(truth, inferred);
  const int k = static_cast<int>(truth.cols());
  const std::vector<int> lt = argmax_labels(truth);
  const std::vector<int> li = argmax_labels(inferred);

  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd size_t_(k), size_i(k);
  size_t_.setZero();
  size_i.setZero();
  for (std::size_t n = 0; n < lt.size(); ++n) {
    joint(lt[n], li[n]) += 1.0;
    size_t_(lt[n]) += 1.0;
    size_i(li[n]) += 1.0;
  }
  Eigen::MatrixXd f1(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      const double denom = size_t_(a) + size_i(b);
      f1(a, b) = denom > 0 ? 2.0 * joint(a, b) / denom : 1.0;
    }
  return best_permutation_score(f1) / static_cast<double>(k);
}

std::string format_metrics_text(const std::vector<MetricRecord>& records) {
  std::ostringstream out;
  for (const MetricRecord& r : records) out << r.name << ' ' << r.value << '\n';
  return out.str();
}

nlohmann::json metrics_to_json(const std::vector<MetricRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const MetricRecord& r : records) {
    nlohmann::json rec;
    rec["name"] = r.name;
    rec["value"] = r.value;
    rec["provenance"] = r.provenance;
    arr.push_back(std::move(rec));
  }
  return arr;
}

}  // namespace crep
