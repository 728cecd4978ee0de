#include "crep/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace crep {

namespace {

std::uint64_t pair_key(int i, int j) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
         static_cast<std::uint32_t>(j);
}

}  // namespace

DirectedGraph::DirectedGraph(int n_nodes, std::vector<Edge> edges,
                             std::vector<std::string> labels)
    : n_(n_nodes) {
  if (n_ < 0) throw data_error("node count must be nonnegative");
  if (!labels.empty() && static_cast<int>(labels.size()) != n_)
    throw data_error("label count does not match node count");
  labels_ = std::move(labels);
  if (labels_.empty()) {
    labels_.reserve(n_);
    for (int i = 0; i < n_; ++i) labels_.push_back(std::to_string(i));
  }

  weight_map_.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    if (e.src < 0 || e.src >= n_ || e.dst < 0 || e.dst >= n_)
      throw data_error("edge endpoint out of range");
    if (e.src == e.dst) throw data_error("self-loops are not representable");
    if (e.weight <= 0) throw data_error("edge weights must be positive");
    weight_map_[pair_key(e.src, e.dst)] += e.weight;
  }

  edges_.reserve(weight_map_.size());
  for (const auto& [key, wt] : weight_map_) {
    Edge e;
    e.src = static_cast<int>(key >> 32);
    e.dst = static_cast<int>(key & 0xffffffffULL);
    e.weight = wt;
    edges_.push_back(e);
    total_weight_ += wt;
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });

  reverse_weight_.resize(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e)
    reverse_weight_[e] = weight(edges_[e].dst, edges_[e].src);
}

long long DirectedGraph::weight(int i, int j) const {
  auto it = weight_map_.find(pair_key(i, j));
  return it == weight_map_.end() ? 0 : it->second;
}

DegreeSummary degree_stats(const DirectedGraph& g) {
  DegreeSummary s;
  s.total_weight = g.total_weight();
  s.n_edges = static_cast<long long>(g.n_edges());
  s.avg_degree = g.n_nodes() > 0
                     ? static_cast<double>(s.total_weight) / g.n_nodes()
                     : 0.0;
  return s;
}

namespace {

bool parse_weight(const std::string& tok, long long* out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, *out);
  return res.ec == std::errc{} && res.ptr == last;
}

}  // namespace

DirectedGraph load_edge_list(std::istream& in, LoadStats* stats) {
  std::unordered_map<std::string, int> index;
  std::vector<std::string> labels;
  std::vector<Edge> edges;
  LoadStats local;

  auto node_id = [&](const std::string& tok) {
    auto [it, inserted] = index.emplace(tok, static_cast<int>(labels.size()));
    if (inserted) labels.push_back(tok);
    return it->second;
  };

  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream fields(line);
    std::vector<std::string> tok;
    std::string t;
    while (fields >> t) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    ++local.lines_read;
    if (tok.size() != 2 && tok.size() != 3)
      throw data_error("line " + std::to_string(line_no) +
                       ": expected `src dst [weight]`, got " +
                       std::to_string(tok.size()) + " fields");
    long long wt = 1;
    if (tok.size() == 3 && !parse_weight(tok[2], &wt))
      throw data_error("line " + std::to_string(line_no) +
                       ": weight must be an integer, got `" + tok[2] + "`");
    if (wt <= 0)
      throw data_error("line " + std::to_string(line_no) +
                       ": weight must be positive, got " + std::to_string(wt));
    int i = node_id(tok[0]);
    int j = node_id(tok[1]);
    if (i == j) {
      ++local.self_loops_dropped;
      continue;
    }
    edges.push_back({i, j, wt});
  }

  if (local.lines_read == 0) throw data_error("empty edge list");
  if (edges.empty())
    throw data_error("edge list holds no usable edges (only self-loops)");
  if (stats) *stats = local;
  const int n = static_cast<int>(labels.size());
  return DirectedGraph(n, std::move(edges), std::move(labels));
}

DirectedGraph load_edge_list_file(const std::string& path, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open edge list: " + path);
  return load_edge_list(in, stats);
}

void save_edge_list(const DirectedGraph& g, std::ostream& out) {
  for (const Edge& e : g.edges())
    out << g.label(e.src) << ' ' << g.label(e.dst) << ' ' << e.weight << '\n';
}

void save_edge_list_file(const DirectedGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open output file: " + path);
  save_edge_list(g, out);
  if (!out) throw data_error("failed writing edge list: " + path);
}

FoldMask::FoldMask(int n_nodes, int fold_count,
                   std::vector<std::uint16_t> assignment)
    : n_(n_nodes), fold_count_(fold_count), assignment_(std::move(assignment)) {
  if (assignment_.size() != static_cast<std::size_t>(n_) * n_)
    throw data_error("fold assignment has wrong size");
}

int FoldMask::fold_of(int i, int j) const {
  if (i == j) throw data_error("diagonal pairs are not assigned to folds");
  return assignment_[static_cast<std::size_t>(i) * n_ + j];
}

std::vector<long long> FoldMask::fold_sizes() const {
  std::vector<long long> sizes(fold_count_, 0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      if (i != j) ++sizes[assignment_[static_cast<std::size_t>(i) * n_ + j]];
  return sizes;
}

FoldMask make_folds(int n_nodes, int fold_count, std::uint64_t seed) {
  if (n_nodes < 2) throw data_error("fold masks need at least 2 nodes");
  if (fold_count < 2) throw data_error("fold count must be at least 2");
  long long n_pairs = static_cast<long long>(n_nodes) * (n_nodes - 1);
  if (fold_count > n_pairs)
    throw data_error("fold count exceeds the number of ordered pairs");
  if (fold_count > 65535) throw data_error("fold count above 65535");

  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::uint16_t> assignment(
      static_cast<std::size_t>(n_nodes) * n_nodes, 0);
  long long pos = 0;
  for (int i = 0; i < n_nodes; ++i)
    for (int j = 0; j < n_nodes; ++j) {
      if (i == j) continue;
      std::size_t slot = order[pos++];
      assignment[static_cast<std::size_t>(i) * n_nodes + j] =
          static_cast<std::uint16_t>(slot % fold_count);
    }
  return FoldMask(n_nodes, fold_count, std::move(assignment));
}

FoldMask make_folds(const DirectedGraph& g, int fold_count,
                    std::uint64_t seed) {
  return make_folds(g.n_nodes(), fold_count, seed);
}

std::vector<std::pair<int, int>> pairs_in_fold(const FoldMask& mask,
                                               int fold) {
  std::vector<std::pair<int, int>> out;
  int n = mask.n_nodes();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && mask.fold_of(i, j) == fold) out.emplace_back(i, j);
  return out;
}

TrainMask::TrainMask(const FoldMask& folds,
                     const std::vector<int>& train_folds)
    : n_(folds.n_nodes()) {
  if (train_folds.empty()) throw data_error("no train folds selected");
  std::vector<std::uint8_t> in_train(folds.fold_count(), 0);
  for (int f : train_folds) {
    if (f < 0 || f >= folds.fold_count())
      throw data_error("train fold index out of range");
    in_train[f] = 1;
  }

  trained_.assign(static_cast<std::size_t>(n_) * n_, 0);
  by_row_.resize(n_);
  by_col_.resize(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      if (i == j) continue;
      if (in_train[folds.fold_of(i, j)]) {
        trained_[static_cast<std::size_t>(i) * n_ + j] = 1;
      } else {
        by_row_[i].push_back(j);
        by_col_[j].push_back(i);
        ++held_count_;
      }
    }
}

TrainMask hold_out_fold(const FoldMask& folds, int test_fold) {
  if (test_fold < 0 || test_fold >= folds.fold_count())
    throw data_error("test fold index out of range");
  std::vector<int> train;
  for (int f = 0; f < folds.fold_count(); ++f)
    if (f != test_fold) train.push_back(f);
  return TrainMask(folds, train);
}

DirectedGraph preprocess(const DirectedGraph& g, PreprocessStats* stats) {
  int n = g.n_nodes();
  std::vector<std::uint8_t> alive(n, 1);
  PreprocessStats local;

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<long long> in_deg(n, 0), out_deg(n, 0);
    for (const Edge& e : g.edges()) {
      if (!alive[e.src] || !alive[e.dst]) continue;
      ++out_deg[e.src];
      ++in_deg[e.dst];
    }
    for (int i = 0; i < n; ++i) {
      if (alive[i] && (in_deg[i] == 0 || out_deg[i] == 0)) {
        alive[i] = 0;
        ++local.nodes_removed_degree;
        changed = true;
      }
    }
  }

  // Largest weakly connected component among surviving nodes; ties break
  // to the component containing the smallest node index.
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> nbrs(n);
  for (const Edge& e : g.edges()) {
    if (!alive[e.src] || !alive[e.dst]) continue;
    nbrs[e.src].push_back(e.dst);
    nbrs[e.dst].push_back(e.src);
  }
  int n_comp = 0;
  std::vector<long long> comp_size;
  for (int start = 0; start < n; ++start) {
    if (!alive[start] || comp[start] >= 0) continue;
    std::vector<int> stack{start};
    comp[start] = n_comp;
    long long size = 0;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      ++size;
      for (int w : nbrs[u])
        if (comp[w] < 0) {
          comp[w] = n_comp;
          stack.push_back(w);
        }
    }
    comp_size.push_back(size);
    ++n_comp;
  }
  int best = 0;
  for (int c = 1; c < n_comp; ++c)
    if (comp_size[c] > comp_size[best]) best = c;

  std::vector<int> remap(n, -1);
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) {
    if (alive[i] && comp[i] == best) {
      remap[i] = static_cast<int>(labels.size());
      labels.push_back(g.label(i));
    } else if (alive[i]) {
      ++local.nodes_removed_component;
    }
  }
  if (labels.empty()) throw data_error("preprocessing removed every node");

  std::vector<Edge> edges;
  for (const Edge& e : g.edges())
    if (remap[e.src] >= 0 && remap[e.dst] >= 0)
      edges.push_back({remap[e.src], remap[e.dst], e.weight});
  if (stats) *stats = local;
  const int n_kept = static_cast<int>(labels.size());
  return DirectedGraph(n_kept, std::move(edges), std::move(labels));
}

}  // namespace crep
