#pragma once

// Scoring network: item + position embeddings, a causal transformer encoder,
// K interest capsules from dynamic routing, target attention over capsules,
// and a sigmoid interaction score.

#include <cstdint>
#include <span>
#include <vector>

#include "uda4sr/autodiff.hpp"
#include "uda4sr/corpus.hpp"
#include "uda4sr/rng.hpp"

namespace uda4sr {

using ad::Matrix;

struct ModelConfig {
  int d = 64;
  int n_layers = 2;
  int n_heads = 2;
  int k_capsules = 4;
  int routing_iters = 3;
  double dropout = 0.1;
  int t_max = 50;

  void validate() const;
};

struct TransformerBlock {
  ad::Param wq, wk, wv, wo;
  ad::Param ln1_gain, ln1_bias;
  ad::Param ff_w1, ff_b1, ff_w2, ff_b2;
  ad::Param ln2_gain, ln2_bias;
};

struct ModelParams {
  // (V+1)×d; row 0 is padding and stays zero.
  ad::Param item_embedding;
  ad::Param position_embedding;  // t_max×d
  std::vector<TransformerBlock> blocks;
  ad::Param routing;  // shared capsule transform S, d×d
  // K×t_max fixed routing logits; drawn once, never trained or decayed.
  Matrix routing_logit_init;

  static ModelParams init(std::int32_t num_items, const ModelConfig& cfg, std::uint64_t seed);

  std::vector<ad::Param*> params();
  std::vector<const ad::Param*> params() const;
  void zero_grad();
};

struct ForwardMode {
  bool training = false;
  Rng* dropout_rng = nullptr;
};

// L×d encoding of `items` (1 <= L <= t_max). Row p only sees positions <= p.
ad::Var encode_sequence(ad::Tape& tape, std::span<const ItemId> items, ModelParams& params,
                        const ModelConfig& cfg, const ForwardMode& mode = {});

struct InterestVars {
  ad::Var capsules;  // K×d
  Matrix coupling;   // K×L, zero columns at masked positions
  // Coupling matrix of every routing iteration.
  std::vector<Matrix> coupling_trace;
};

// Dynamic routing over the rows of H. `mask` (size L, empty = all valid)
// marks the positions that take part.
InterestVars capsule_routing(ad::Tape& tape, const ad::Var& H, const std::vector<bool>& mask, ModelParams& params,
                             const ModelConfig& cfg);

// Per target row q: softmax_k(u_k·q / sqrt(d)) weighted sum of capsules. C×d.
ad::Var target_attention(const ad::Var& capsules, const ad::Var& targets);
// Attention weights alone, C×K.
ad::Var target_attention_weights(const ad::Var& capsules, const ad::Var& targets);
// sigmoid(v·q) per row, C×1.
ad::Var score(const ad::Var& preference, const ad::Var& targets);

// Plain-value helpers.
Eigen::VectorXd squash(const Eigen::VectorXd& s);
double sigmoid(double x);

struct InterestSet {
  Matrix capsules;  // K×d
  Matrix coupling;  // K×L
};

InterestSet extract_interests(std::span<const ItemId> history, ModelParams& params, const ModelConfig& cfg);

// Ranking score v·q of every row of `item_embedding` (index = item id). The
// probability is sigmoid of it; logits avoid saturated ties when ranking.
Eigen::VectorXd score_all(const InterestSet& interests, const Matrix& item_embedding);

}  // namespace uda4sr
