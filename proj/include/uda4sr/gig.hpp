#pragma once

// Global item relationship graph: undirected co-occurrence graph over items,
// built from windowed position pairs, degree-normalized, thresholded, and
// pruned harder for popular items. Also hosts weighted neighborhood sampling.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "uda4sr/corpus.hpp"
#include "uda4sr/rng.hpp"

namespace uda4sr {

struct GraphConfig {
  int order_n = 3;
  double epsilon = 0.01;
  int k_min = 5;
  int k_max = 50;
  int hops = 2;
  int fanout = 10;

  void validate() const;
};

enum class GraphStage { kRaw, kNormalized, kPruned };

std::string to_string(GraphStage stage);
GraphStage graph_stage_from_string(const std::string& s);

struct Neighbor {
  ItemId node = 0;
  double weight = 0.0;

  bool operator==(const Neighbor&) const = default;
};

class ItemGraph {
 public:
  ItemGraph() = default;
  // num_nodes = V + 1; node 0 (padding) stays isolated.
  explicit ItemGraph(std::int32_t num_nodes, GraphStage stage = GraphStage::kRaw)
      : adjacency_(static_cast<std::size_t>(num_nodes)), stage_(stage) {}

  std::int32_t num_nodes() const { return static_cast<std::int32_t>(adjacency_.size()); }
  std::int32_t num_items() const { return num_nodes() - 1; }
  GraphStage stage() const { return stage_; }
  void set_stage(GraphStage s) { stage_ = s; }
  int order() const { return order_; }
  void set_order(int n) { order_ = n; }

  // Neighbors sorted by node index.
  std::span<const Neighbor> neighbors(ItemId i) const { return adjacency_[static_cast<std::size_t>(i)]; }
  std::vector<Neighbor>& mutable_neighbors(ItemId i) { return adjacency_[static_cast<std::size_t>(i)]; }
  // 0 when the edge is absent.
  double weight(ItemId i, ItemId j) const;
  std::size_t degree(ItemId i) const { return adjacency_[static_cast<std::size_t>(i)].size(); }
  std::size_t num_edges() const;
  // Sum of incident weights.
  double strength(ItemId i) const;

  // Builds a symmetric graph from an i<j edge list. Duplicate pairs are summed.
  static ItemGraph from_edges(std::int32_t num_nodes, GraphStage stage,
                              const std::vector<std::tuple<ItemId, ItemId, double>>& edges);
  // i<j edge list in (i, j) order.
  std::vector<std::tuple<ItemId, ItemId, double>> edges() const;

  // Symmetric, no self-loops, strictly positive weights, sorted unique neighbors.
  bool check_invariants(std::string* why = nullptr) const;

 private:
  std::vector<std::vector<Neighbor>> adjacency_;
  GraphStage stage_ = GraphStage::kRaw;
  int order_ = 0;
};

// Each ordered position pair (p, p+d), 1 <= d <= n, with distinct items adds
// 1/d to their undirected edge. Uses the train region of `corpus` plus the full
// length of every sequence in `extra` (synthetic sequences when enabled).
// `workers` > 1 shards sequences; shard maps are merged in fixed order.
ItemGraph build_gig(const SplitCorpus& corpus, int n, std::span<const UserSequence> extra = {},
                    int workers = 1);

// w_ij / sqrt(s_i s_j) with s_i the weighted degree.
ItemGraph normalize(const ItemGraph& raw);

// Drops edges with weight < epsilon. No renormalization.
ItemGraph prune_threshold(const ItemGraph& graph, double epsilon);

// Neighbor budget for a node of the given training frequency.
int popularity_budget(std::int64_t freq, int k_min, int k_max);

// Keeps each node's top-K_i neighbors, then the edges both endpoints kept.
ItemGraph prune_popularity(const ItemGraph& graph, std::span<const std::int64_t> item_freq, int k_min,
                           int k_max);

// normalize -> prune_threshold -> prune_popularity.
ItemGraph build_pruned_gig(const SplitCorpus& corpus, const GraphConfig& cfg,
                           std::span<const UserSequence> extra = {});

struct SubgraphEdge {
  ItemId a = 0;
  ItemId b = 0;
  double weight = 0.0;

  bool operator==(const SubgraphEdge&) const = default;
};

struct SubgraphView {
  std::vector<ItemId> seed_items;
  // Deduplicated, in discovery order; seeds first.
  std::vector<ItemId> nodes;
  // Parallel to `nodes`.
  std::vector<int> hop;
  // Undirected, deduplicated, a < b.
  std::vector<SubgraphEdge> edges;

  int hop_of(ItemId node) const;  // -1 when absent
  bool operator==(const SubgraphView&) const = default;
};

// Draws up to `count` distinct neighbors, successive draws proportional to weight.
std::vector<Neighbor> sample_neighbors(std::span<const Neighbor> neighbors, int count, Rng& rng);

// Breadth-wise weighted expansion for `hops` rounds from the seeds.
SubgraphView sample_subgraph(const ItemGraph& graph, std::span<const ItemId> seeds, int hops, int fanout,
                             Rng& rng);

// Edge-list cache: `#gig v1 n=<n> stage=<stage> V=<V>` then `i j weight`, i<j.
void write_graph(const ItemGraph& graph, std::ostream& out);
ItemGraph read_graph(std::istream& in);
void save_graph(const ItemGraph& graph, const std::filesystem::path& path);
ItemGraph load_graph(const std::filesystem::path& path);

}  // namespace uda4sr
