#include "uda4sr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uda4sr/errors.hpp"
#include "uda4sr/optim.hpp"

namespace uda4sr {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (n_neg < 1) throw ConfigError("train.n_neg must be >= 1");
  if (!(mu_reg >= 0.0)) throw ConfigError("train.mu_reg must be >= 0");
  if (max_epochs < 0) throw ConfigError("train.max_epochs must be >= 0");
  if (patience < 1) throw ConfigError("train.patience must be >= 1");
  if (eval_workers < 1) throw ConfigError("train.eval_workers must be >= 1");
}

namespace {

std::vector<ItemId> sorted_unique(std::vector<ItemId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

TrainingPool make_training_pool(const SplitCorpus& corpus, std::span<const UserSequence> synthetic) {
  TrainingPool pool;
  pool.num_items = corpus.num_items();
  for (const auto& s : corpus.sequences) {
    pool.sequences.push_back(s);
    pool.user_items.push_back(sorted_unique(s.items));
  }
  for (const auto& s : synthetic) {
    UserSequence row = s;
    row.synthetic = true;
    row.train_end = row.valid_end = row.length();
    std::vector<ItemId> items = s.items;
    if (s.user_index >= 0 && static_cast<std::size_t>(s.user_index) < corpus.sequences.size()) {
      const auto& origin = corpus.sequences[static_cast<std::size_t>(s.user_index)].items;
      items.insert(items.end(), origin.begin(), origin.end());
    }
    pool.sequences.push_back(std::move(row));
    pool.user_items.push_back(sorted_unique(std::move(items)));
  }
  return pool;
}

std::vector<ItemId> sample_negatives(std::int32_t num_items, std::span<const ItemId> user_items, int n_neg, Rng& rng) {
  std::size_t excluded = 0;
  for (ItemId it : user_items) {
    if (it >= 1 && it <= num_items) ++excluded;
  }
  const std::size_t eligible = static_cast<std::size_t>(num_items) - excluded;
  if (n_neg < 0 || eligible < static_cast<std::size_t>(n_neg)) {
    throw CatalogExhausted(eligible, static_cast<std::size_t>(std::max(n_neg, 0)));
  }
  std::vector<ItemId> out;
  out.reserve(static_cast<std::size_t>(n_neg));
  auto is_user_item = [&](ItemId c) { return std::binary_search(user_items.begin(), user_items.end(), c); };
  if (eligible * 2 >= static_cast<std::size_t>(num_items)) {
    // Rejection sampling: at least half the catalog is eligible.
    std::uniform_int_distribution<ItemId> pick(1, num_items);
    while (static_cast<int>(out.size()) < n_neg) {
      const ItemId c = pick(rng);
      if (is_user_item(c) || std::find(out.begin(), out.end(), c) != out.end()) continue;
      out.push_back(c);
    }
    return out;
  }
  std::vector<ItemId> pool;
  pool.reserve(eligible);
  for (ItemId c = 1; c <= num_items; ++c) {
    if (!is_user_item(c)) pool.push_back(c);
  }
  for (int k = 0; k < n_neg; ++k) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[pick(rng)]);
    out.push_back(pool[static_cast<std::size_t>(k)]);
  }
  return out;
}

std::vector<TrainInstance> sample_instances(const TrainingPool& pool, int n_neg, int t_max, Rng& rng,
                                            std::size_t* skipped) {
  std::vector<TrainInstance> out;
  out.reserve(pool.sequences.size());
  std::size_t skip_count = 0;
  for (std::size_t i = 0; i < pool.sequences.size(); ++i) {
    const auto& s = pool.sequences[i];
    const std::int32_t region = s.synthetic ? s.length() : s.train_end;
    if (region < 2) {
      ++skip_count;
      continue;
    }
    std::uniform_int_distribution<std::int32_t> cut(1, region - 1);
    const std::int32_t t = cut(rng);
    TrainInstance inst;
    const std::int32_t from = std::max(0, t - t_max);
    inst.prefix.assign(s.items.begin() + from, s.items.begin() + t);
    inst.positive = s.items[static_cast<std::size_t>(t)];
    inst.negatives = sample_negatives(pool.num_items, pool.user_items[i], n_neg, rng);
    inst.source = i;
    out.push_back(std::move(inst));
  }
  if (skipped) *skipped = skip_count;
  return out;
}

double rec_loss(double pos_score, std::span<const double> neg_scores) {
  auto clamp = [](double p) { return std::clamp(p, 1e-7, 1.0 - 1e-7); };
  double loss = -std::log(clamp(pos_score));
  for (double n : neg_scores) loss -= std::log(1.0 - clamp(n));
  return loss / static_cast<double>(1 + neg_scores.size());
}

ad::Var rec_loss(const ad::Var& scores) {
  const auto C = scores.rows();
  ad::Var p = ad::clamp(scores, 1e-7, 1.0 - 1e-7);
  // Row 0 uses p, the negatives use 1 − p.
  ad::Matrix sign = ad::Matrix::Constant(C, 1, -1.0);
  ad::Matrix offset = ad::Matrix::Ones(C, 1);
  sign(0, 0) = 1.0;
  offset(0, 0) = 0.0;
  ad::Var likelihood = ad::add_const(ad::mul(p, scores.tape()->constant(sign)), offset);
  return ad::scale(ad::mean(ad::log(likelihood)), -1.0);
}

ViewBatch make_batch_views(std::span<const TrainInstance> batch, const ItemGraph& graph, const GraphConfig& cfg,
                           Rng& rng) {
  ViewBatch vb;
  for (const auto& inst : batch) vb.items.push_back(inst.positive);
  vb.items = sorted_unique(std::move(vb.items));
  auto views = make_views(graph, vb.items, cfg, rng);
  vb.first = std::move(views.first);
  vb.second = std::move(views.second);
  return vb;
}

LossBreakdown total_loss(std::span<const TrainInstance> batch, const ViewBatch* views, ModelParams& model,
                         GnnParams& gnn, const ModelConfig& model_cfg, const LossWeights& weights,
                         const ForwardMode& mode) {
  if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
  ad::Tape tape;
  std::vector<ad::Var> per_instance;
  per_instance.reserve(batch.size());
  for (const auto& inst : batch) {
    ad::Var H = encode_sequence(tape, inst.prefix, model, model_cfg, mode);
    InterestVars interests = capsule_routing(tape, H, {}, model, model_cfg);
    std::vector<ItemId> candidates{inst.positive};
    candidates.insert(candidates.end(), inst.negatives.begin(), inst.negatives.end());
    ad::Var q = ad::gather_rows(tape, model.item_embedding, candidates);
    ad::Var v = target_attention(interests.capsules, q);
    per_instance.push_back(rec_loss(score(v, q)));
  }
  LossBreakdown out;
  ad::Var total = ad::mean(ad::concat_rows(per_instance));
  out.rec = total.scalar();

  if (views && weights.lambda_cl > 0.0 && views->items.size() >= 2) {
    ad::Var z1 = gnn_encode(tape, views->first, model.item_embedding, gnn);
    ad::Var z2 = gnn_encode(tape, views->second, model.item_embedding, gnn);
    ad::Var cl = info_nce(z1, z2, weights.tau);
    out.cl = cl.scalar();
    total = ad::add(total, ad::scale(cl, weights.lambda_cl));
  }

  std::vector<ad::Param*> decayed;
  for (ad::Param* p : model.params()) {
    if (p->decay) decayed.push_back(p);
  }
  for (ad::Param* p : gnn.params()) {
    if (p->decay) decayed.push_back(p);
  }
  if (weights.mu_reg > 0.0) {
    std::vector<ad::Var> squares;
    for (ad::Param* p : decayed) squares.push_back(ad::sum_squares(tape, *p));
    ad::Var reg = ad::sum(ad::concat_rows(squares));
    out.reg = reg.scalar();
    total = ad::add(total, ad::scale(reg, weights.mu_reg));
  } else {
    for (ad::Param* p : decayed) {
      const auto skip = p->pin_first_row ? 1 : 0;
      out.reg += p->value.bottomRows(p->value.rows() - skip).squaredNorm();
    }
  }
  out.total = total.scalar();
  tape.backward(total);
  return out;
}

nlohmann::json history_to_json(std::span<const EpochRecord> history) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& h : history) {
    arr.push_back({{"epoch", h.epoch},
                   {"rec_loss", h.rec_loss},
                   {"cl_loss", h.cl_loss},
                   {"reg", h.reg},
                   {"val_recall10", h.val_recall10},
                   {"val_ndcg10", h.val_ndcg10}});
  }
  return arr;
}

TrainResult train(const SplitCorpus& corpus, const ItemGraph& graph, std::span<const UserSequence> synthetic,
                  const TrainSettings& settings) {
  const auto& mcfg = settings.model;
  const auto& tcfg = settings.train;
  mcfg.validate();
  tcfg.validate();
  settings.graph.validate();
  settings.contrast.validate();
  if (graph.num_nodes() != corpus.num_items() + 1) {
    throw DimensionMismatch("train: graph node count does not match the corpus vocabulary");
  }

  TrainResult result{ModelParams::init(corpus.num_items(), mcfg, tcfg.seed), GnnParams::init(mcfg.d, tcfg.seed), {},
                     0.0, 0.0, 0};
  const TrainingPool pool = make_training_pool(corpus, synthetic);
  const auto val_events = make_events(corpus, Split::kValid, mcfg.t_max);
  const LossWeights weights{settings.contrast.lambda_cl, settings.contrast.tau, tcfg.mu_reg};

  ModelParams model = result.model;
  GnnParams gnn = result.gnn;
  {
    const auto initial = evaluate(ModelRanker(model, mcfg), val_events, "initial", tcfg.eval_workers);
    result.initial_val_recall10 = initial.recall.at(10);
    result.initial_val_ndcg10 = initial.ndcg.at(10);
  }
  if (tcfg.max_epochs == 0) return result;

  std::vector<ad::Param*> all = model.params();
  for (ad::Param* p : gnn.params()) all.push_back(p);
  Adam opt(all, AdamConfig{tcfg.lr});

  double best = -std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    const auto e = static_cast<std::uint64_t>(epoch);
    Rng inst_rng(derive_seed(derive_seed(tcfg.seed, Stream::kTrainInstances), e));
    Rng shuffle_rng(derive_seed(derive_seed(tcfg.seed, Stream::kTrainShuffle), e));
    Rng view_rng(derive_seed(derive_seed(tcfg.seed, Stream::kViews), e));
    Rng dropout_rng(derive_seed(derive_seed(tcfg.seed, Stream::kDropout), e));

    std::vector<TrainInstance> instances = sample_instances(pool, tcfg.n_neg, mcfg.t_max, inst_rng);
    std::shuffle(instances.begin(), instances.end(), shuffle_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < instances.size(); start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t end = std::min(instances.size(), start + static_cast<std::size_t>(tcfg.batch_size));
      std::span<const TrainInstance> batch(instances.data() + start, end - start);
      opt.zero_grad();
      ViewBatch views;
      const bool use_cl = weights.lambda_cl > 0.0;
      if (use_cl) views = make_batch_views(batch, graph, settings.graph, view_rng);
      const LossBreakdown lb =
          total_loss(batch, use_cl ? &views : nullptr, model, gnn, mcfg, weights, ForwardMode{true, &dropout_rng});
      if (!std::isfinite(lb.total)) throw NonFiniteLoss(epoch, batches);
      opt.step();
      rec.rec_loss += lb.rec;
      rec.cl_loss += lb.cl;
      rec.reg += lb.reg;
      ++batches;
    }
    if (batches > 0) {
      rec.rec_loss /= static_cast<double>(batches);
      rec.cl_loss /= static_cast<double>(batches);
      rec.reg /= static_cast<double>(batches);
    }
    const auto val = evaluate(ModelRanker(model, mcfg), val_events, "valid", tcfg.eval_workers);
    rec.val_recall10 = val.recall.at(10);
    rec.val_ndcg10 = val.ndcg.at(10);
    result.history.push_back(rec);

    if (rec.val_ndcg10 > best) {
      best = rec.val_ndcg10;
      result.model = model;
      result.gnn = gnn;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= tcfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace uda4sr
