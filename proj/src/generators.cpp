#include "crep/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "crep/inference.hpp"
#include "crep/random.hpp"

namespace crep {

double HLParams::z() const {
  return 1.0 + 2.0 * std::exp(-theta) + std::exp(-2.0 * theta + alpha);
}

double HLParams::p_null() const { return 1.0 / z(); }

double HLParams::p_single() const { return std::exp(-theta) / z(); }

double HLParams::p_mutual() const {
  return std::exp(-2.0 * theta + alpha) / z();
}

double HLParams::marginal_edge() const {
  return (std::exp(-theta) + std::exp(-2.0 * theta + alpha)) / z();
}

double HLParams::conditional_edge(int a) const {
  return 1.0 / (1.0 + std::exp(theta - alpha * a));
}

double HLParams::expected_reciprocity() const {
  const double pm = p_mutual();
  const double ps = p_single();
  return pm / (ps + pm);
}

CrepParams build_planted_params(const PlantedConfig& cfg) {
  if (cfg.n_nodes < 1) throw data_error("planted network needs nodes");
  if (cfg.k < 1) throw data_error("planted K must be positive");
  if (cfg.k > cfg.n_nodes) throw data_error("planted K exceeds node count");
  if (cfg.eta < 0 || cfg.eta >= 1)
    throw data_error("planted eta must lie in [0, 1)");
  if (cfg.overlap < 0 || cfg.overlap > 1)
    throw data_error("overlap must lie in [0, 1]");
  if (cfg.p1() <= 0) throw data_error("planted p1 must be positive");

  const int n = cfg.n_nodes;
  const int k = cfg.k;
  CrepParams p;
  p.k = k;
  p.eta = cfg.eta;
  p.u = Eigen::MatrixXd::Zero(n, k);
  p.v = Eigen::MatrixXd::Zero(n, k);

  // Equal blocks; the division remainder joins the last block.
  const int base = n / k;
  for (int i = 0; i < n; ++i) {
    const int block = std::min(i / base, k - 1);
    p.u(i, block) = 1.0;
    p.v(i, block) = 1.0;
  }

  std::mt19937_64 rng(cfg.seed);
  const int n_over = static_cast<int>(std::llround(cfg.overlap * n));
  if (n_over > 0) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::gamma_distribution<double> gamma(cfg.dirichlet_alpha, 1.0);
    for (int t = 0; t < n_over; ++t) {
      const int i = order[t];
      Eigen::RowVectorXd row(k);
      double sum = 0.0;
      for (int a = 0; a < k; ++a) {
        row(a) = gamma(rng);
        sum += row(a);
      }
      if (sum < 1e-300)
        row.setConstant(1.0 / k);
      else
        row /= sum;
      p.u.row(i) = row;
      p.v.row(i) = row;
    }
  }

  p.w = Eigen::MatrixXd::Constant(k, k, cfg.p2());
  p.w.diagonal().setConstant(cfg.p1());
  return p;
}

double marginal_mean(const CrepParams& p, int i, int j) {
  if (p.eta >= 1)
    throw data_error("marginal mean undefined for eta >= 1");
  return (lambda0(p, i, j) + p.eta * lambda0(p, j, i)) /
         (1.0 - p.eta * p.eta);
}

double sparsity_constant(const CrepParams& p, double expected_edges) {
  if (p.eta >= 1) throw data_error("sparsity constant needs eta < 1");
  if (expected_edges <= 0)
    throw data_error("expected edge total must be positive");
  const double sum0 = lambda0_offdiag_sum(p);
  if (sum0 <= 0)
    throw data_error("sparsity constant undefined: sum of lambda^0 is zero");
  return (1.0 - p.eta) * expected_edges / sum0;
}

DirectedGraph sample_benchmark(const CrepParams& p, double expected_edges,
                               std::uint64_t seed) {
  validate_params(p);
  if (p.eta >= 1) throw data_error("benchmark sampler needs eta < 1");
  CrepParams scaled = p;
  scaled.w *= sparsity_constant(p, expected_edges);

  const int n = scaled.n_nodes();
  const double eta = scaled.eta;
  const Eigen::MatrixXd uw = scaled.u * scaled.w;

  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      SplitMix64 rng = stream_rng(seed, static_cast<std::uint64_t>(i),
                                  static_cast<std::uint64_t>(j));
      const double l_ij = uw.row(i).dot(scaled.v.row(j));
      const double l_ji = uw.row(j).dot(scaled.v.row(i));

      std::bernoulli_distribution coin(0.5);
      const bool first_is_ij = coin(rng);
      const double l_first = first_is_ij ? l_ij : l_ji;
      const double l_second = first_is_ij ? l_ji : l_ij;

      const double m_first =
          (l_first + eta * l_second) / (1.0 - eta * eta);
      long long a_first = 0;
      if (m_first > 0) {
        std::poisson_distribution<long long> draw(m_first);
        a_first = draw(rng);
      }
      const double rate_second = l_second + eta * static_cast<double>(a_first);
      long long a_second = 0;
      if (rate_second > 0) {
        std::poisson_distribution<long long> draw(rate_second);
        a_second = draw(rng);
      }

      const int src1 = first_is_ij ? i : j;
      const int dst1 = first_is_ij ? j : i;
      if (a_first > 0) edges.push_back({src1, dst1, a_first});
      if (a_second > 0) edges.push_back({dst1, src1, a_second});
    }
  }
  return DirectedGraph(n, std::move(edges));
}

DirectedGraph sample_hl(int n_nodes, double theta, double alpha,
                        std::uint64_t seed) {
  if (n_nodes < 1) throw data_error("HL sampler needs nodes");
  HLParams hl{theta, alpha};
  const double p_first = hl.marginal_edge();

  std::vector<Edge> edges;
  for (int i = 0; i < n_nodes; ++i) {
    for (int j = i + 1; j < n_nodes; ++j) {
      SplitMix64 rng = stream_rng(seed, static_cast<std::uint64_t>(i),
                                  static_cast<std::uint64_t>(j));
      std::bernoulli_distribution first(p_first);
      const int a_ij = first(rng) ? 1 : 0;
      std::bernoulli_distribution second(hl.conditional_edge(a_ij));
      const int a_ji = second(rng) ? 1 : 0;
      if (a_ij) edges.push_back({i, j, 1});
      if (a_ji) edges.push_back({j, i, 1});
    }
  }
  return DirectedGraph(n_nodes, std::move(edges));
}

double theta_from_density(double p_single_target, double alpha) {
  if (!(p_single_target > 0 && p_single_target < 1))
    throw data_error("edge probability target must lie in (0, 1)");
  auto marginal = [alpha](double theta) {
    return HLParams{theta, alpha}.marginal_edge();
  };
  double lo = -60.0 - std::abs(alpha);
  double hi = 60.0 + std::abs(alpha);
  if (marginal(lo) < p_single_target || marginal(hi) > p_single_target)
    throw numerical_error("density target could not be bracketed");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (marginal(mid) > p_single_target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace crep
