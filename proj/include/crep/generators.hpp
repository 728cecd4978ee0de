#pragma once

#include <cstdint>

#include "crep/graph.hpp"
#include "crep/params.hpp"

namespace crep {

// Recipe for planted synthetic networks: K equal blocks (remainder joins
// the last block), assortative affinity with p1 = avg_degree*K/N on the
// diagonal and p2 = 0.1*p1 off it, a seeded fraction `overlap` of nodes
// with Dirichlet(dirichlet_alpha) mixed membership, global reciprocity eta.
struct PlantedConfig {
  int n_nodes = 500;
  int k = 3;
  double avg_degree = 20.0;
  double eta = 0.0;
  double overlap = 0.0;
  double dirichlet_alpha = 0.1;
  double expected_edges = 0.0;  // <= 0 means avg_degree * n_nodes
  std::uint64_t seed = 42;

  double p1() const { return avg_degree * k / n_nodes; }
  double p2() const { return 0.1 * p1(); }
  double target_edges() const {
    return expected_edges > 0 ? expected_edges : avg_degree * n_nodes;
  }
};

// Holland-Leinhardt dyad-independent ERGM with density parameter theta and
// reciprocity coupling alpha. Binary entries; dyad states (00, 10, 01, 11)
// carry weights (1, e^-theta, e^-theta, e^(-2 theta + alpha)) / Z.
struct HLParams {
  double theta = 0.0;
  double alpha = 0.0;

  double z() const;
  double p_null() const;
  double p_single() const;  // each single direction
  double p_mutual() const;
  // P(A_ij = 1) marginally, and P(A_ji = 1 | A_ij = a).
  double marginal_edge() const;
  double conditional_edge(int a) const;
  // Limit fraction of edges that are reciprocated.
  double expected_reciprocity() const;
};

CrepParams build_planted_params(const PlantedConfig& cfg);

// m_ij = (lambda^0_ij + eta * lambda^0_ji) / (1 - eta^2), the mean of the
// joint dyad distribution.
double marginal_mean(const CrepParams& p, int i, int j);

// c = (1 - eta) * expected_edges / sum_{i != j} lambda^0_ij; rescaling
// w -> c*w makes sum m_ij equal expected_edges exactly.
double sparsity_constant(const CrepParams& p, double expected_edges);

// Exact sampler: rescales by the sparsity constant, then per unordered pair
// coin-flips a direction, draws the first entry from Poisson(m) and the
// second from Poisson(lambda^0 + eta * first). Each dyad uses its own RNG
// stream keyed by (seed, min(i,j), max(i,j)).
DirectedGraph sample_benchmark(const CrepParams& p, double expected_edges,
                               std::uint64_t seed);

// Per dyad: first entry from the HL marginal, second from the conditional.
DirectedGraph sample_hl(int n_nodes, double theta, double alpha,
                        std::uint64_t seed);

// Solves P(A_ij = 1) = p_single_target for theta at fixed alpha by
// bisection; the marginal is strictly decreasing in theta.
double theta_from_density(double p_single_target, double alpha);

}  // namespace crep
