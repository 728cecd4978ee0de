#pragma once

// Independent reference implementations used to cross-check library results.
// Everything here is deliberately naive: dense matrices, nested loops, no
// code shared with the library internals.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "crep/graph.hpp"
#include "crep/params.hpp"

namespace oracle {

inline Eigen::MatrixXd dense_adjacency(const crep::DirectedGraph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.n_nodes(), g.n_nodes());
  for (const crep::Edge& e : g.edges())
    a(e.src, e.dst) += static_cast<double>(e.weight);
  return a;
}

inline double lambda0_loop(const crep::CrepParams& p, int i, int j) {
  double s = 0.0;
  for (int k = 0; k < p.k; ++k)
    for (int q = 0; q < p.k; ++q) s += p.u(i, k) * p.w(k, q) * p.v(j, q);
  return s;
}

// sum over ordered trained pairs of A_ij log(max(lambda_ij, eps)) - lambda_ij.
inline double lpl_loop(const crep::CrepParams& p, const crep::DirectedGraph& g,
                       const crep::TrainMask* mask = nullptr,
                       double eps = 1e-12) {
  const Eigen::MatrixXd a = dense_adjacency(g);
  const int n = g.n_nodes();
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (mask && !mask->trains(i, j)) continue;
      const double lam = lambda0_loop(p, i, j) + p.eta * a(j, i);
      if (a(i, j) > 0) total += a(i, j) * std::log(std::max(lam, eps));
      total -= lam;
    }
  return total;
}

inline double golden_max(const std::function<double(double)>& f, double lo,
                         double hi, double tol = 1e-10) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Central difference with a fixed step; callers pick h to balance truncation
// against roundoff for their objective scale.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline crep::CrepParams random_params(int n, int k, std::uint64_t seed,
                                      bool unit_rows = false,
                                      double eta_max = 0.8) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ur(0.05, 1.0);
  crep::CrepParams p;
  p.k = k;
  p.u.resize(n, k);
  p.v.resize(n, k);
  p.w.resize(k, k);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c) {
      p.u(i, c) = ur(rng);
      p.v(i, c) = ur(rng);
    }
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) p.w(a, b) = ur(rng);
  if (unit_rows)
    for (int i = 0; i < n; ++i) {
      p.u.row(i) /= p.u.row(i).sum();
      p.v.row(i) /= p.v.row(i).sum();
    }
  p.eta = eta_max * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return p;
}

inline crep::DirectedGraph random_graph(int n, double density,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  std::geometric_distribution<long long> extra(0.6);
  std::vector<crep::Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (ur(rng) < density) edges.push_back({i, j, 1 + extra(rng)});
    }
  if (edges.empty()) edges.push_back({0, 1, 1});
  return crep::DirectedGraph(n, std::move(edges));
}

// Node i of the input becomes node perm[i] of the output.
inline crep::DirectedGraph relabel(const crep::DirectedGraph& g,
                                   const std::vector<int>& perm) {
  std::vector<crep::Edge> edges;
  edges.reserve(g.n_edges());
  for (const crep::Edge& e : g.edges())
    edges.push_back({perm[e.src], perm[e.dst], e.weight});
  std::vector<std::string> labels(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) labels[perm[i]] = g.label(i);
  return crep::DirectedGraph(g.n_nodes(), std::move(edges), std::move(labels));
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) r.mean += x;
  r.mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  r.se = n > 1 ? r.sd / std::sqrt(n) : 0.0;
  return r;
}

inline double poisson_pmf(long long k, double lam) {
  if (lam <= 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(-lam + static_cast<double>(k) * std::log(lam) -
                  std::lgamma(static_cast<double>(k) + 1.0));
}

// Exact dyad joint implied by the two-step routine with the direction coin:
// J(a, b) = 1/2 Pois(a; m_ij) Pois(b; l0_ji + eta a)
//         + 1/2 Pois(b; m_ji) Pois(a; l0_ij + eta b).
// Conditioned on the first-drawn direction, the second entry follows the
// Poisson conditional exactly; marginalized over the coin the conditional
// mean is this mixture value instead.
inline double mixture_conditional_mean(double l0_ij, double l0_ji, double eta,
                                       long long a, long long b_max = 200) {
  const double m_ij = (l0_ij + eta * l0_ji) / (1.0 - eta * eta);
  const double m_ji = (l0_ji + eta * l0_ij) / (1.0 - eta * eta);
  const double p1a = poisson_pmf(a, m_ij);
  const double e1 = l0_ji + eta * static_cast<double>(a);
  double p2a = 0.0, e2num = 0.0;
  for (long long b = 0; b < b_max; ++b) {
    const double t = poisson_pmf(b, m_ji) *
                     poisson_pmf(a, l0_ij + eta * static_cast<double>(b));
    p2a += t;
    e2num += static_cast<double>(b) * t;
  }
  return (0.5 * p1a * e1 + 0.5 * e2num) / (0.5 * p1a + 0.5 * p2a);
}

}  // namespace oracle
