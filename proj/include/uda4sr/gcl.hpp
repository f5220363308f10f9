#pragma once

// Graph contrastive learning: a two-layer message-passing encoder over sampled
// subgraph views of the item graph, and the symmetric InfoNCE loss between
// two views of the same items.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>

#include "uda4sr/autodiff.hpp"
#include "uda4sr/gig.hpp"

namespace uda4sr {

struct ContrastConfig {
  double tau = 0.2;
  double lambda_cl = 0.1;

  void validate() const;
};

struct GnnParams {
  // Two layers, each d×2d, applied as ReLU(W · concat(h, m)).
  ad::Param layer0;
  ad::Param layer1;

  static GnnParams init(int d, std::uint64_t seed);
  std::vector<ad::Param*> params() { return {&layer0, &layer1}; }
  std::vector<const ad::Param*> params() const { return {&layer0, &layer1}; }
  void zero_grad();
};

// Row-normalized weighted adjacency of the view (N×N over view.nodes).
ad::Matrix view_mean_operator(const SubgraphView& view);

// Unit-normalized representations of view.seed_items (one row per seed).
ad::Var gnn_encode(ad::Tape& tape, const SubgraphView& view, ad::Param& item_embedding, GnnParams& params);

// Plain-value convenience: item -> representation for every seed.
std::unordered_map<ItemId, Eigen::VectorXd> gnn_encode_items(const SubgraphView& view, ad::Param& item_embedding,
                                                             GnnParams& params);

// Two independent samplings of the same seeds with distinct derived streams.
std::pair<SubgraphView, SubgraphView> make_views(const ItemGraph& graph, std::span<const ItemId> items,
                                                 const GraphConfig& cfg, Rng& rng);

// Symmetric InfoNCE with cosine similarity and in-batch negatives.
ad::Var info_nce(const ad::Var& z1, const ad::Var& z2, double tau);
// One direction only (z1 rows as anchors).
ad::Var info_nce_directed(const ad::Var& z1, const ad::Var& z2, double tau);

}  // namespace uda4sr
