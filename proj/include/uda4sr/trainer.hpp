#pragma once

// Multi-task training: next-item BCE with sampled negatives, graph
// contrastive loss on the batch's positive items, and L2 regularization,
// all sharing one item embedding table.

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "uda4sr/corpus.hpp"
#include "uda4sr/evaluator.hpp"
#include "uda4sr/gcl.hpp"
#include "uda4sr/gig.hpp"
#include "uda4sr/interest.hpp"

namespace uda4sr {

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 64;
  int n_neg = 4;
  double mu_reg = 1e-5;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 42;
  int eval_workers = 1;

  void validate() const;
};

struct TrainInstance {
  std::vector<ItemId> prefix;
  ItemId positive = 0;
  std::vector<ItemId> negatives;
  std::size_t source = 0;  // index into the training pool
};

// Real sequences plus synthetic ones, with each row's excluded-negative set.
struct TrainingPool {
  std::vector<UserSequence> sequences;
  // Sorted unique items never drawn as negatives for the row (the source user's
  // full interaction set across all splits).
  std::vector<std::vector<ItemId>> user_items;
  std::int32_t num_items = 0;
};

TrainingPool make_training_pool(const SplitCorpus& corpus, std::span<const UserSequence> synthetic = {});

// Uniform cut t in [1, train_end - 1]; synthetic rows use their full length.
// Rows whose train region is shorter than 2 are skipped and counted.
std::vector<TrainInstance> sample_instances(const TrainingPool& pool, int n_neg, int t_max, Rng& rng,
                                            std::size_t* skipped = nullptr);

// n_neg distinct items from [1, num_items] minus `user_items` (sorted).
std::vector<ItemId> sample_negatives(std::int32_t num_items, std::span<const ItemId> user_items, int n_neg, Rng& rng);

// (−ln pos − Σ ln(1 − neg)) / (1 + n_neg), scores clamped to [1e-7, 1 − 1e-7].
double rec_loss(double pos_score, std::span<const double> neg_scores);
// Same on a C×1 column whose first row is the positive.
ad::Var rec_loss(const ad::Var& scores);

struct ViewBatch {
  std::vector<ItemId> items;  // unique positives, ascending
  SubgraphView first;
  SubgraphView second;
};

ViewBatch make_batch_views(std::span<const TrainInstance> batch, const ItemGraph& graph, const GraphConfig& cfg,
                           Rng& rng);

struct LossBreakdown {
  double rec = 0.0;
  double cl = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

struct LossWeights {
  double lambda_cl = 0.1;
  double tau = 0.2;
  double mu_reg = 1e-5;
};

// Evaluates the multi-task objective and accumulates its gradients into the
// parameters' grad buffers (callers zero them first). `views` may be null when
// the contrastive term is off.
LossBreakdown total_loss(std::span<const TrainInstance> batch, const ViewBatch* views, ModelParams& model,
                         GnnParams& gnn, const ModelConfig& model_cfg, const LossWeights& weights,
                         const ForwardMode& mode = {});

struct EpochRecord {
  int epoch = 0;
  double rec_loss = 0.0;
  double cl_loss = 0.0;
  double reg = 0.0;
  double val_recall10 = 0.0;
  double val_ndcg10 = 0.0;
};

nlohmann::json history_to_json(std::span<const EpochRecord> history);

struct TrainSettings {
  ModelConfig model;
  GraphConfig graph;
  ContrastConfig contrast;
  TrainConfig train;
};

struct TrainResult {
  ModelParams model;
  GnnParams gnn;
  std::vector<EpochRecord> history;
  double initial_val_recall10 = 0.0;
  double initial_val_ndcg10 = 0.0;
  int best_epoch = 0;  // 0 when no epoch ran
};

TrainResult train(const SplitCorpus& corpus, const ItemGraph& graph, std::span<const UserSequence> synthetic,
                  const TrainSettings& settings);

}  // namespace uda4sr
