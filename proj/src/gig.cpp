#include "uda4sr/gig.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "uda4sr/errors.hpp"

namespace uda4sr {

void GraphConfig::validate() const {
  if (order_n < 1) throw ConfigError("graph.order_n must be >= 1");
  if (!(epsilon >= 0.0)) throw ConfigError("graph.epsilon must be >= 0");
  if (k_min < 1) throw ConfigError("graph.k_min must be >= 1");
  if (k_max < k_min) throw ConfigError("graph.k_max must be >= k_min");
  if (hops < 0) throw ConfigError("graph.hops must be >= 0");
  if (fanout < 1) throw ConfigError("graph.fanout must be >= 1");
}

std::string to_string(GraphStage stage) {
  switch (stage) {
    case GraphStage::kRaw: return "raw";
    case GraphStage::kNormalized: return "normalized";
    case GraphStage::kPruned: return "pruned";
  }
  return "raw";
}

GraphStage graph_stage_from_string(const std::string& s) {
  if (s == "raw") return GraphStage::kRaw;
  if (s == "normalized") return GraphStage::kNormalized;
  if (s == "pruned") return GraphStage::kPruned;
  throw Error("unknown graph stage: " + s);
}

double ItemGraph::weight(ItemId i, ItemId j) const {
  const auto& adj = adjacency_[static_cast<std::size_t>(i)];
  auto it = std::lower_bound(adj.begin(), adj.end(), j,
                             [](const Neighbor& n, ItemId v) { return n.node < v; });
  return (it != adj.end() && it->node == j) ? it->weight : 0.0;
}

std::size_t ItemGraph::num_edges() const {
  std::size_t twice = 0;
  for (const auto& adj : adjacency_) twice += adj.size();
  return twice / 2;
}

double ItemGraph::strength(ItemId i) const {
  double s = 0.0;
  for (const auto& n : adjacency_[static_cast<std::size_t>(i)]) s += n.weight;
  return s;
}

ItemGraph ItemGraph::from_edges(std::int32_t num_nodes, GraphStage stage,
                                const std::vector<std::tuple<ItemId, ItemId, double>>& edges) {
  ItemGraph g(num_nodes, stage);
  for (const auto& [i, j, w] : edges) {
    if (i == j) throw Error("self-loop on node " + std::to_string(i));
    if (i < 0 || j < 0 || i >= num_nodes || j >= num_nodes) throw Error("edge endpoint out of range");
    g.adjacency_[static_cast<std::size_t>(i)].push_back({j, w});
    g.adjacency_[static_cast<std::size_t>(j)].push_back({i, w});
  }
  for (auto& adj : g.adjacency_) {
    std::sort(adj.begin(), adj.end(), [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    std::vector<Neighbor> merged;
    merged.reserve(adj.size());
    for (const auto& n : adj) {
      if (!merged.empty() && merged.back().node == n.node) {
        merged.back().weight += n.weight;
      } else {
        merged.push_back(n);
      }
    }
    adj = std::move(merged);
  }
  return g;
}

std::vector<std::tuple<ItemId, ItemId, double>> ItemGraph::edges() const {
  std::vector<std::tuple<ItemId, ItemId, double>> out;
  for (ItemId i = 0; i < num_nodes(); ++i) {
    for (const auto& n : adjacency_[static_cast<std::size_t>(i)]) {
      if (i < n.node) out.emplace_back(i, n.node, n.weight);
    }
  }
  return out;
}

bool ItemGraph::check_invariants(std::string* why) const {
  auto fail = [why](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  for (ItemId i = 0; i < num_nodes(); ++i) {
    const auto& adj = adjacency_[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < adj.size(); ++k) {
      const auto& n = adj[k];
      if (n.node == i) return fail("self-loop at " + std::to_string(i));
      if (!(n.weight > 0.0)) return fail("non-positive weight at " + std::to_string(i));
      if (k > 0 && adj[k - 1].node >= n.node) return fail("unsorted or duplicate neighbors at " + std::to_string(i));
      if (n.node < 0 || n.node >= num_nodes()) return fail("neighbor out of range");
      if (weight(n.node, i) != n.weight) {
        return fail("asymmetric edge " + std::to_string(i) + "-" + std::to_string(n.node));
      }
    }
  }
  return true;
}

namespace {

using PairKey = std::uint64_t;

PairKey pair_key(ItemId a, ItemId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

void accumulate_sequence(std::span<const ItemId> items, int n, std::unordered_map<PairKey, double>& acc) {
  const std::size_t L = items.size();
  for (std::size_t p = 0; p < L; ++p) {
    for (int d = 1; d <= n && p + static_cast<std::size_t>(d) < L; ++d) {
      const ItemId a = items[p];
      const ItemId b = items[p + static_cast<std::size_t>(d)];
      if (a == b) continue;
      acc[pair_key(a, b)] += 1.0 / static_cast<double>(d);
    }
  }
}

}  // namespace

ItemGraph build_gig(const SplitCorpus& corpus, int n, std::span<const UserSequence> extra, int workers) {
  if (n < 1) throw std::invalid_argument("build_gig: n must be >= 1");
  const std::int32_t num_nodes = corpus.num_items() + 1;

  std::vector<std::span<const ItemId>> regions;
  regions.reserve(corpus.sequences.size() + extra.size());
  for (const auto& s : corpus.sequences) {
    regions.emplace_back(s.items.data(), static_cast<std::size_t>(s.train_end));
  }
  for (const auto& s : extra) regions.emplace_back(s.items.data(), s.items.size());
  for (const auto& r : regions) {
    for (ItemId it : r) {
      if (it <= kPadding || it >= num_nodes) throw Error("build_gig: item index out of range");
    }
  }

  workers = std::max(1, std::min<int>(workers, static_cast<int>(regions.size())));
  std::vector<std::unordered_map<PairKey, double>> shards(static_cast<std::size_t>(workers));
  auto run_shard = [&](int w) {
    const std::size_t begin = regions.size() * static_cast<std::size_t>(w) / static_cast<std::size_t>(workers);
    const std::size_t end = regions.size() * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(workers);
    for (std::size_t i = begin; i < end; ++i) accumulate_sequence(regions[i], n, shards[static_cast<std::size_t>(w)]);
  };
  if (workers == 1) {
    run_shard(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(run_shard, w);
    for (auto& t : threads) t.join();
  }

  // Canonical reduction: pairs in key order, shards in index order.
  std::vector<PairKey> keys;
  for (const auto& shard : shards) {
    for (const auto& kv : shard) keys.push_back(kv.first);
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::vector<std::tuple<ItemId, ItemId, double>> edges;
  edges.reserve(keys.size());
  for (PairKey k : keys) {
    double w = 0.0;
    for (const auto& shard : shards) {
      auto it = shard.find(k);
      if (it != shard.end()) w += it->second;
    }
    edges.emplace_back(static_cast<ItemId>(k >> 32), static_cast<ItemId>(k & 0xffffffffULL), w);
  }
  ItemGraph g = ItemGraph::from_edges(num_nodes, GraphStage::kRaw, edges);
  g.set_order(n);
  return g;
}

ItemGraph normalize(const ItemGraph& raw) {
  if (raw.stage() != GraphStage::kRaw) throw std::invalid_argument("normalize: graph is not raw");
  std::vector<double> strength(static_cast<std::size_t>(raw.num_nodes()));
  for (ItemId i = 0; i < raw.num_nodes(); ++i) strength[static_cast<std::size_t>(i)] = raw.strength(i);
  ItemGraph out = raw;
  out.set_stage(GraphStage::kNormalized);
  for (ItemId i = 0; i < out.num_nodes(); ++i) {
    for (auto& n : out.mutable_neighbors(i)) {
      n.weight = n.weight / std::sqrt(strength[static_cast<std::size_t>(i)] * strength[static_cast<std::size_t>(n.node)]);
    }
  }
  return out;
}

ItemGraph prune_threshold(const ItemGraph& graph, double epsilon) {
  if (graph.stage() == GraphStage::kRaw) throw std::invalid_argument("prune_threshold: graph is not normalized");
  ItemGraph out = graph;
  for (ItemId i = 0; i < out.num_nodes(); ++i) {
    auto& adj = out.mutable_neighbors(i);
    adj.erase(std::remove_if(adj.begin(), adj.end(), [epsilon](const Neighbor& n) { return n.weight < epsilon; }),
              adj.end());
  }
  return out;
}

int popularity_budget(std::int64_t freq, int k_min, int k_max) {
  const double k = std::round(static_cast<double>(k_max) / std::log2(2.0 + static_cast<double>(freq)));
  return std::clamp(static_cast<int>(k), k_min, k_max);
}

ItemGraph prune_popularity(const ItemGraph& graph, std::span<const std::int64_t> item_freq, int k_min,
                           int k_max) {
  if (k_min < 1 || k_max < k_min) throw std::invalid_argument("prune_popularity: need 1 <= k_min <= k_max");
  if (item_freq.size() != static_cast<std::size_t>(graph.num_nodes())) {
    throw std::invalid_argument("prune_popularity: item_freq size must equal num_nodes");
  }
  const std::int32_t N = graph.num_nodes();
  // kept[i] holds the neighbor ids node i retains, sorted.
  std::vector<std::vector<ItemId>> kept(static_cast<std::size_t>(N));
  for (ItemId i = 0; i < N; ++i) {
    std::vector<Neighbor> adj(graph.neighbors(i).begin(), graph.neighbors(i).end());
    const auto budget = static_cast<std::size_t>(popularity_budget(item_freq[static_cast<std::size_t>(i)], k_min, k_max));
    if (adj.size() > budget) {
      std::partial_sort(adj.begin(), adj.begin() + static_cast<std::ptrdiff_t>(budget), adj.end(),
                        [](const Neighbor& a, const Neighbor& b) {
                          return a.weight != b.weight ? a.weight > b.weight : a.node < b.node;
                        });
      adj.resize(budget);
    }
    auto& ids = kept[static_cast<std::size_t>(i)];
    for (const auto& n : adj) ids.push_back(n.node);
    std::sort(ids.begin(), ids.end());
  }
  ItemGraph out(N, GraphStage::kPruned);
  out.set_order(graph.order());
  for (ItemId i = 0; i < N; ++i) {
    auto& adj = out.mutable_neighbors(i);
    for (const auto& n : graph.neighbors(i)) {
      const auto& mine = kept[static_cast<std::size_t>(i)];
      const auto& theirs = kept[static_cast<std::size_t>(n.node)];
      if (std::binary_search(mine.begin(), mine.end(), n.node) && std::binary_search(theirs.begin(), theirs.end(), i)) {
        adj.push_back(n);
      }
    }
  }
  return out;
}

ItemGraph build_pruned_gig(const SplitCorpus& corpus, const GraphConfig& cfg, std::span<const UserSequence> extra) {
  cfg.validate();
  ItemGraph g = build_gig(corpus, cfg.order_n, extra);
  g = prune_threshold(normalize(g), cfg.epsilon);
  return prune_popularity(g, corpus.item_freq, cfg.k_min, cfg.k_max);
}

int SubgraphView::hop_of(ItemId node) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == node) return hop[i];
  }
  return -1;
}

std::vector<Neighbor> sample_neighbors(std::span<const Neighbor> neighbors, int count, Rng& rng) {
  if (count <= 0) return {};
  if (static_cast<std::size_t>(count) >= neighbors.size()) return {neighbors.begin(), neighbors.end()};
  std::vector<Neighbor> pool(neighbors.begin(), neighbors.end());
  std::vector<Neighbor> out;
  out.reserve(static_cast<std::size_t>(count));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    double total = 0.0;
    for (const auto& n : pool) total += n.weight;
    const double r = unit(rng) * total;
    std::size_t pick = pool.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      acc += pool[i].weight;
      if (r < acc) {
        pick = i;
        break;
      }
    }
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

SubgraphView sample_subgraph(const ItemGraph& graph, std::span<const ItemId> seeds, int hops, int fanout, Rng& rng) {
  if (seeds.empty()) throw std::invalid_argument("sample_subgraph: no seeds");
  SubgraphView view;
  std::unordered_map<ItemId, int> hop_of;
  for (ItemId s : seeds) {
    if (s <= kPadding || s >= graph.num_nodes()) throw SeedNotInGraph(s);
    view.seed_items.push_back(s);
    if (hop_of.emplace(s, 0).second) {
      view.nodes.push_back(s);
      view.hop.push_back(0);
    }
  }
  std::unordered_set<std::uint64_t> seen_edges;
  std::vector<ItemId> frontier = view.nodes;
  for (int h = 1; h <= hops && !frontier.empty(); ++h) {
    std::vector<ItemId> next;
    for (ItemId u : frontier) {
      for (const auto& nb : sample_neighbors(graph.neighbors(u), fanout, rng)) {
        if (seen_edges.insert(pair_key(u, nb.node)).second) {
          view.edges.push_back({std::min(u, nb.node), std::max(u, nb.node), nb.weight});
        }
        if (hop_of.emplace(nb.node, h).second) {
          view.nodes.push_back(nb.node);
          view.hop.push_back(h);
          next.push_back(nb.node);
        }
      }
    }
    frontier = std::move(next);
  }
  return view;
}

void write_graph(const ItemGraph& graph, std::ostream& out) {
  out << "#gig v1 n=" << graph.order() << " stage=" << to_string(graph.stage()) << " V=" << graph.num_items() << '\n';
  out << std::setprecision(12);
  for (const auto& [i, j, w] : graph.edges()) out << i << ' ' << j << ' ' << w << '\n';
}

ItemGraph read_graph(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error("graph file: missing header");
  std::istringstream hs(header);
  std::string magic, version, n_field, stage_field, v_field;
  hs >> magic >> version >> n_field >> stage_field >> v_field;
  if (magic != "#gig" || version != "v1" || n_field.rfind("n=", 0) != 0 || stage_field.rfind("stage=", 0) != 0 ||
      v_field.rfind("V=", 0) != 0) {
    throw Error("graph file: bad header '" + header + "'");
  }
  const int order = std::stoi(n_field.substr(2));
  const GraphStage stage = graph_stage_from_string(stage_field.substr(6));
  const std::int32_t V = std::stoi(v_field.substr(2));
  std::vector<std::tuple<ItemId, ItemId, double>> edges;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ItemId i = 0, j = 0;
    double w = 0.0;
    if (!(ls >> i >> j >> w) || i >= j) throw MalformedLine(line_no, "expected 'i j weight' with i<j");
    edges.emplace_back(i, j, w);
  }
  ItemGraph g = ItemGraph::from_edges(V + 1, stage, edges);
  g.set_order(order);
  return g;
}

void save_graph(const ItemGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_graph(graph, out);
}

ItemGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());
  return read_graph(in);
}

}  // namespace uda4sr
