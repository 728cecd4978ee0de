#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crep/common.hpp"

namespace crep {

struct Edge {
  int src = 0;
  int dst = 0;
  long long weight = 0;
};

// Sparse directed weighted graph. Immutable after construction; no
// self-loops; all stored weights are strictly positive integers. Absent
// entries mean A_ij = 0. Edges are kept sorted by (src, dst) so that
// iteration order, and therefore every accumulated sum, is deterministic.
class DirectedGraph {
 public:
  DirectedGraph() = default;
  // Merges duplicate (src, dst) records by summing weights. Throws
  // data_error on self-loops, nonpositive weights, or bad indices.
  DirectedGraph(int n_nodes, std::vector<Edge> edges,
                std::vector<std::string> labels = {});

  int n_nodes() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t n_edges() const { return edges_.size(); }
  long long total_weight() const { return total_weight_; }

  // A_ij; 0 when the pair is not stored. O(1) amortized.
  long long weight(int i, int j) const;
  // A_ji for the stored edge at index e; precomputed at construction.
  long long reverse_weight(std::size_t e) const { return reverse_weight_[e]; }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int i) const { return labels_[i]; }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<long long> reverse_weight_;
  std::unordered_map<std::uint64_t, long long> weight_map_;
  std::vector<std::string> labels_;
  long long total_weight_ = 0;
};

struct DegreeSummary {
  long long total_weight = 0;  // M = sum of all A_ij
  double avg_degree = 0.0;     // M / N
  long long n_edges = 0;       // stored nonzero entries
};

DegreeSummary degree_stats(const DirectedGraph& g);

struct LoadStats {
  long long self_loops_dropped = 0;
  long long lines_read = 0;
};

// Reads edge-list text: one record per line, whitespace- or comma-delimited
// fields `src dst [weight]`, `#` starts a comment line. Node labels are
// arbitrary tokens indexed densely in first-seen order. Duplicate records
// sum; self-loop records are dropped and counted in stats. Weights must be
// positive integers; real-valued weights are rejected.
DirectedGraph load_edge_list(std::istream& in, LoadStats* stats = nullptr);
DirectedGraph load_edge_list_file(const std::string& path,
                                  LoadStats* stats = nullptr);

// Writes the graph in the same edge-list format, sorted by (src, dst).
void save_edge_list(const DirectedGraph& g, std::ostream& out);
void save_edge_list_file(const DirectedGraph& g, const std::string& path);

// Partition of all N(N-1) ordered non-diagonal pairs into folds of sizes
// differing by at most one, by seeded uniform shuffle.
class FoldMask {
 public:
  FoldMask() = default;
  FoldMask(int n_nodes, int fold_count, std::vector<std::uint16_t> assignment);

  int n_nodes() const { return n_; }
  int fold_count() const { return fold_count_; }
  int fold_of(int i, int j) const;
  std::vector<long long> fold_sizes() const;

 private:
  int n_ = 0;
  int fold_count_ = 0;
  std::vector<std::uint16_t> assignment_;  // N*N, diagonal unused
};

FoldMask make_folds(int n_nodes, int fold_count, std::uint64_t seed);
FoldMask make_folds(const DirectedGraph& g, int fold_count, std::uint64_t seed);

std::vector<std::pair<int, int>> pairs_in_fold(const FoldMask& mask, int fold);

// Train-side view of a FoldMask: fast membership plus precomputed lists of
// held-out pairs grouped by row and by column, used by masked fitting.
class TrainMask {
 public:
  TrainMask(const FoldMask& folds, const std::vector<int>& train_folds);

  int n_nodes() const { return n_; }
  bool trains(int i, int j) const {
    return trained_[static_cast<std::size_t>(i) * n_ + j] != 0;
  }
  long long held_count() const { return held_count_; }
  // held_by_row()[i] lists all j with (i, j) held out; held_by_col()[j]
  // lists all i with (i, j) held out.
  const std::vector<std::vector<int>>& held_by_row() const { return by_row_; }
  const std::vector<std::vector<int>>& held_by_col() const { return by_col_; }

 private:
  int n_ = 0;
  long long held_count_ = 0;
  std::vector<std::uint8_t> trained_;
  std::vector<std::vector<int>> by_row_;
  std::vector<std::vector<int>> by_col_;
};

// Convenience: train on every fold except test_fold.
TrainMask hold_out_fold(const FoldMask& folds, int test_fold);

struct PreprocessStats {
  int nodes_removed_degree = 0;
  int nodes_removed_component = 0;
};

// Dataset preparation used for real networks: iteratively removes nodes
// lacking an in-edge or an out-edge, then keeps the largest weakly
// connected component. Off by default in all pipelines.
DirectedGraph preprocess(const DirectedGraph& g,
                         PreprocessStats* stats = nullptr);

}  // namespace crep
