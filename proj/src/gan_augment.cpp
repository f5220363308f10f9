#include "uda4sr/gan_augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uda4sr/errors.hpp"

namespace uda4sr {

void AugmentConfig::validate() const {
  if (!(prefix_frac > 0.0 && prefix_frac < 1.0)) throw ConfigError("gan.prefix_frac must be in (0, 1)");
  if (!(rho_aug >= 0.0)) throw ConfigError("gan.rho_aug must be >= 0");
  if (!(temp_start > 0.0 && temp_end > 0.0)) throw ConfigError("gan temperatures must be > 0");
  if (!(eta_div >= 0.0)) throw ConfigError("gan.eta_div must be >= 0");
  if (mle_epochs < 0) throw ConfigError("gan.mle_epochs must be >= 0");
  if (adv_steps < 0) throw ConfigError("gan.adv_steps must be >= 0");
  if (batch_size < 2) throw ConfigError("gan.batch_size must be >= 2");
  if (!(lr > 0.0)) throw ConfigError("gan.lr must be > 0");
}

double AugmentConfig::temperature_at(int step) const {
  if (adv_steps <= 1) return temp_end;
  const double frac = std::clamp(static_cast<double>(step) / static_cast<double>(adv_steps - 1), 0.0, 1.0);
  return temp_start + (temp_end - temp_start) * frac;
}

namespace {

ad::Matrix uniform_init(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

ad::Var clamped_log(const ad::Var& p) { return ad::log(ad::clamp(p, 1e-7, 1.0 - 1e-7)); }

// -mean log(1 - p)
ad::Var bce_negative(const ad::Var& p) {
  ad::Var one_minus = ad::add_const(ad::scale(p, -1.0), ad::Matrix::Ones(p.rows(), p.cols()));
  return ad::scale(ad::mean(clamped_log(one_minus)), -1.0);
}

// -mean log p
ad::Var bce_positive(const ad::Var& p) { return ad::scale(ad::mean(clamped_log(p)), -1.0); }

ad::Var rnn_cell(ad::Tape& tape, const ad::Var& x, const ad::Var& h, GeneratorParams& g) {
  ad::Var pre = ad::add(ad::matmul(x, tape.param(g.w_in)), ad::matmul(h, tape.param(g.w_hidden)));
  return ad::tanh(ad::add_rowvec(pre, tape.param(g.bias)));
}

ad::Var output_logits(ad::Tape& tape, const ad::Var& h, GeneratorParams& g) {
  ad::Var full = ad::add_rowvec(ad::matmul(h, tape.param(g.w_out)), tape.param(g.b_out));
  return ad::slice_cols(full, 1, full.cols() - 1);
}

void check_items(std::span<const ItemId> items, std::int32_t num_items) {
  for (ItemId it : items) {
    if (it <= kPadding || it > num_items) throw std::out_of_range("generator: item index " + std::to_string(it));
  }
}

}  // namespace

GeneratorParams GeneratorParams::init(std::int32_t num_items, int d, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x67656eULL));
  GeneratorParams g;
  g.w_in = ad::Param("gen.w_in", uniform_init(d, d, rng));
  g.w_hidden = ad::Param("gen.w_hidden", uniform_init(d, d, rng));
  g.bias = ad::Param("gen.bias", ad::Matrix::Zero(1, d));
  g.w_out = ad::Param("gen.w_out", uniform_init(d, num_items + 1, rng));
  g.b_out = ad::Param("gen.b_out", ad::Matrix::Zero(1, num_items + 1));
  return g;
}

DiscriminatorParams DiscriminatorParams::init(int d, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x646973ULL));
  DiscriminatorParams p;
  p.w1 = ad::Param("disc.w1", uniform_init(d, d, rng));
  p.b1 = ad::Param("disc.b1", ad::Matrix::Zero(1, d));
  p.w2 = ad::Param("disc.w2", uniform_init(d, 1, rng));
  p.b2 = ad::Param("disc.b2", ad::Matrix::Zero(1, 1));
  return p;
}

int prefix_length(int length, double prefix_frac) {
  if (length < 2) throw BadLength("sequence too short to split into prefix and continuation");
  const int p = static_cast<int>(std::ceil(prefix_frac * static_cast<double>(length) - 1e-9));
  return std::clamp(p, 1, length - 1);
}

GeneratedVars generate_on_tape(ad::Tape& tape, std::span<const ItemId> prefix, int target_len,
                               const GenerateOptions& opts, Rng& rng, GeneratorParams& params,
                               const ad::Matrix& item_embedding) {
  if (prefix.empty()) throw BadLength("generate_continuation: empty prefix");
  if (target_len <= static_cast<int>(prefix.size())) {
    throw BadLength("generate_continuation: target_len must exceed the prefix length");
  }
  if (!(opts.temperature > 0.0)) throw std::invalid_argument("generate_continuation: temperature must be > 0");
  const std::int32_t V = params.num_items();
  if (item_embedding.rows() != V + 1 || item_embedding.cols() != params.hidden()) {
    throw DimensionMismatch("generator: embedding table shape does not match generator");
  }
  check_items(prefix, V);
  ad::Var real_table = tape.constant(item_embedding.bottomRows(V));
  ad::Var h = tape.constant(ad::Matrix::Zero(1, params.hidden()));
  for (ItemId it : prefix) h = rnn_cell(tape, tape.constant(item_embedding.row(it)), h, params);

  GeneratedVars out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double tiny = std::numeric_limits<double>::min();
  const int steps = target_len - static_cast<int>(prefix.size());
  for (int s = 0; s < steps; ++s) {
    ad::Var logits = output_logits(tape, h, params);
    ad::Matrix noise = ad::Matrix::Zero(1, V);
    if (opts.gumbel_noise) {
      for (Eigen::Index k = 0; k < V; ++k) noise(0, k) = -std::log(-std::log(std::max(unit(rng), tiny)));
    }
    ad::Var perturbed = ad::add_const(logits, noise);
    Eigen::Index best = 0;
    perturbed.value().row(0).maxCoeff(&best);
    ad::Var soft = ad::softmax_rows(ad::scale(perturbed, 1.0 / opts.temperature));
    out.soft.push_back(soft);
    out.hard.push_back(static_cast<ItemId>(best) + 1);
    if (s + 1 < steps) h = rnn_cell(tape, ad::matmul(soft, real_table), h, params);
  }
  return out;
}

Continuation generate_continuation(std::span<const ItemId> prefix, int target_len, const GenerateOptions& opts,
                                   Rng& rng, GeneratorParams& params, const ad::Matrix& item_embedding) {
  ad::Tape tape;
  GeneratedVars g = generate_on_tape(tape, prefix, target_len, opts, rng, params, item_embedding);
  Continuation c;
  c.soft.resize(static_cast<Eigen::Index>(g.soft.size()), params.num_items());
  for (std::size_t i = 0; i < g.soft.size(); ++i) c.soft.row(static_cast<Eigen::Index>(i)) = g.soft[i].value();
  c.hard = std::move(g.hard);
  return c;
}

double diversity_penalty(std::span<const ad::Matrix> soft_batch) {
  Eigen::RowVectorXd total;
  std::size_t rows = 0;
  for (const auto& m : soft_batch) {
    if (m.rows() == 0) continue;
    if (total.size() == 0) total = Eigen::RowVectorXd::Zero(m.cols());
    if (m.cols() != total.size()) throw InvalidDistribution("diversity_penalty: rows differ in width");
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (m.row(r).minCoeff() < -1e-6 || std::abs(m.row(r).sum() - 1.0) > 1e-6) {
        throw InvalidDistribution("diversity_penalty: row is not a probability distribution");
      }
      total += m.row(r);
      ++rows;
    }
  }
  if (rows == 0) throw InvalidDistribution("diversity_penalty: no distributions");
  const Eigen::RowVectorXd mean = total / static_cast<double>(rows);
  double entropy = 0.0;
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    if (mean(k) > 0.0) entropy -= mean(k) * std::log(mean(k));
  }
  return std::max(0.0, std::log(static_cast<double>(mean.size())) - entropy);
}

ad::Var diversity_penalty(std::span<const ad::Var> soft_rows) {
  if (soft_rows.empty()) throw InvalidDistribution("diversity_penalty: no distributions");
  ad::Var stacked = soft_rows.size() == 1 ? soft_rows[0] : ad::concat_rows(soft_rows);
  ad::Var mean = ad::mean_rows(stacked);
  ad::Matrix log_v(1, 1);
  log_v(0, 0) = std::log(static_cast<double>(mean.cols()));
  // ln V - H(p̄) = ln V + Σ p̄ ln p̄
  return ad::add_const(ad::sum(ad::xlogx(mean)), log_v);
}

ad::Var generator_nll(ad::Tape& tape, std::span<const ItemId> items, GeneratorParams& params,
                      const ad::Matrix& item_embedding) {
  if (items.size() < 2) throw BadLength("generator_nll: need at least two items");
  check_items(items, params.num_items());
  ad::Var h = tape.constant(ad::Matrix::Zero(1, params.hidden()));
  std::vector<ad::Var> states;
  std::vector<int> targets;
  for (std::size_t t = 0; t + 1 < items.size(); ++t) {
    h = rnn_cell(tape, tape.constant(item_embedding.row(items[t])), h, params);
    states.push_back(h);
    targets.push_back(items[t + 1] - 1);
  }
  ad::Var logits = output_logits(tape, ad::concat_rows(states), params);
  return ad::softmax_xent_rows(logits, targets);
}

std::vector<double> pretrain_generator_mle(const SplitCorpus& corpus, GeneratorParams& params,
                                           const ad::Matrix& item_embedding, int epochs, const AugmentConfig& cfg,
                                           Rng& rng) {
  std::vector<double> curve;
  if (epochs <= 0) return curve;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
    if (corpus.sequences[i].train_end >= 2) order.push_back(i);
  }
  if (order.empty()) return curve;
  Adam opt(params.params(), AdamConfig{cfg.lr});
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      opt.zero_grad();
      ad::Tape tape;
      std::vector<ad::Var> losses;
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = corpus.sequences[order[i]];
        losses.push_back(generator_nll(tape, std::span(s.items.data(), static_cast<std::size_t>(s.train_end)),
                                       params, item_embedding));
      }
      ad::Var loss = ad::mean(ad::concat_rows(losses));
      total += loss.scalar() * static_cast<double>(end - start);
      tape.backward(loss);
      opt.step();
    }
    curve.push_back(total / static_cast<double>(order.size()));
  }
  return curve;
}

ad::Var discriminate(ad::Tape& tape, std::span<const ad::Var> sequence_embeddings, DiscriminatorParams& params) {
  std::vector<ad::Var> pooled;
  pooled.reserve(sequence_embeddings.size());
  for (const auto& e : sequence_embeddings) pooled.push_back(ad::mean_rows(e));
  ad::Var x = ad::concat_rows(pooled);
  ad::Var h = ad::relu(ad::add_rowvec(ad::matmul(x, tape.param(params.w1)), tape.param(params.b1)));
  return ad::sigmoid(ad::add_rowvec(ad::matmul(h, tape.param(params.w2)), tape.param(params.b2)));
}

GanTrainer::GanTrainer(GeneratorParams& generator, DiscriminatorParams& discriminator, const ad::Matrix& item_embedding,
                       const AugmentConfig& cfg)
    : g_(generator),
      d_(discriminator),
      emb_(item_embedding),
      cfg_(cfg),
      g_opt_(generator.params(), AdamConfig{cfg.lr}),
      d_opt_(discriminator.params(), AdamConfig{cfg.lr}) {}

std::vector<ad::Var> GanTrainer::embed_real(ad::Tape& tape, std::span<const std::vector<ItemId>> batch) const {
  std::vector<ad::Var> out;
  for (const auto& seq : batch) {
    ad::Matrix rows(static_cast<Eigen::Index>(seq.size()), emb_.cols());
    for (std::size_t i = 0; i < seq.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = emb_.row(seq[i]);
    out.push_back(tape.constant(std::move(rows)));
  }
  return out;
}

namespace {

struct FakeBatch {
  std::vector<ad::Var> embeddings;  // on the generator tape
  std::vector<ad::Var> soft_rows;
  std::vector<std::vector<ItemId>> sequences;
};

FakeBatch build_fakes(ad::Tape& tape, std::span<const std::vector<ItemId>> real, double temperature, bool straight_through,
                      Rng& rng, GeneratorParams& g, const ad::Matrix& emb, double prefix_frac) {
  FakeBatch fb;
  const std::int32_t V = g.num_items();
  ad::Var real_table = tape.constant(emb.bottomRows(V));
  for (const auto& seq : real) {
    const int L = static_cast<int>(seq.size());
    const int p = prefix_length(L, prefix_frac);
    std::span<const ItemId> prefix(seq.data(), static_cast<std::size_t>(p));
    GeneratedVars gen = generate_on_tape(tape, prefix, L, GenerateOptions{temperature, true}, rng, g, emb);
    ad::Matrix prefix_rows(p, emb.cols());
    for (int i = 0; i < p; ++i) prefix_rows.row(i) = emb.row(seq[static_cast<std::size_t>(i)]);
    std::vector<ad::Var> rows{tape.constant(std::move(prefix_rows))};
    std::vector<ItemId> fake(prefix.begin(), prefix.end());
    for (std::size_t s = 0; s < gen.soft.size(); ++s) {
      ad::Var weights = gen.soft[s];
      if (straight_through) {
        ad::Matrix one_hot = ad::Matrix::Zero(1, V);
        one_hot(0, gen.hard[s] - 1) = 1.0;
        weights = ad::straight_through(one_hot, gen.soft[s]);
      }
      rows.push_back(ad::matmul(weights, real_table));
      fb.soft_rows.push_back(gen.soft[s]);
      fake.push_back(gen.hard[s]);
    }
    fb.embeddings.push_back(ad::concat_rows(rows));
    fb.sequences.push_back(std::move(fake));
  }
  return fb;
}

}  // namespace

AdversarialLosses GanTrainer::step(std::span<const std::vector<ItemId>> real_batch, double temperature, Rng& rng) {
  if (real_batch.size() < 2) throw std::invalid_argument("adversarial_step: batch needs >= 2 sequences");
  AdversarialLosses out;

  ad::Tape g_tape;
  FakeBatch fakes = build_fakes(g_tape, real_batch, temperature, true, rng, g_, emb_, cfg_.prefix_frac);

  // Discriminator step on detached fakes.
  {
    d_opt_.zero_grad();
    ad::Tape tape;
    std::vector<ad::Var> fake_const;
    for (const auto& e : fakes.embeddings) fake_const.push_back(tape.constant(e.value()));
    std::vector<ad::Var> real = embed_real(tape, real_batch);
    ad::Var loss_d = ad::add(bce_positive(discriminate(tape, real, d_)), bce_negative(discriminate(tape, fake_const, d_)));
    out.loss_d = loss_d.scalar();
    tape.backward(loss_d);
    d_opt_.step();
  }

  // Generator step: non-saturating loss plus diversity penalty.
  g_opt_.zero_grad();
  ad::Var div = diversity_penalty(fakes.soft_rows);
  ad::Var loss_g = ad::add(bce_positive(discriminate(g_tape, fakes.embeddings, d_)), ad::scale(div, cfg_.eta_div));
  out.loss_g = loss_g.scalar();
  out.diversity = div.scalar();
  g_tape.backward(loss_g);
  g_opt_.step();
  d_opt_.zero_grad();
  return out;
}

double GanTrainer::generator_loss_soft(std::span<const std::vector<ItemId>> real_batch, double temperature,
                                       std::uint64_t noise_seed) {
  Rng rng(noise_seed);
  ad::Tape tape;
  FakeBatch fakes = build_fakes(tape, real_batch, temperature, false, rng, g_, emb_, cfg_.prefix_frac);
  ad::Var div = diversity_penalty(fakes.soft_rows);
  ad::Var loss = ad::add(bce_positive(discriminate(tape, fakes.embeddings, d_)), ad::scale(div, cfg_.eta_div));
  tape.backward(loss);
  return loss.scalar();
}

double GanTrainer::discriminator_accuracy(std::span<const std::vector<ItemId>> real,
                                          std::span<const std::vector<ItemId>> fake) {
  ad::Tape tape;
  std::size_t correct = 0;
  if (!real.empty()) {
    const ad::Matrix p = discriminate(tape, embed_real(tape, real), d_).value();
    correct += static_cast<std::size_t>((p.array() > 0.5).count());
  }
  if (!fake.empty()) {
    const ad::Matrix p = discriminate(tape, embed_real(tape, fake), d_).value();
    correct += static_cast<std::size_t>((p.array() < 0.5).count());
  }
  const std::size_t total = real.size() + fake.size();
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

GanRunStats train_gan(const SplitCorpus& corpus, GeneratorParams& generator, DiscriminatorParams& discriminator,
                      const ad::Matrix& item_embedding, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  GanRunStats stats;
  stats.mle_curve = pretrain_generator_mle(corpus, generator, item_embedding, cfg.mle_epochs, cfg, rng);
  std::vector<std::vector<ItemId>> pool;
  for (const auto& s : corpus.sequences) {
    if (s.train_end >= 2) pool.emplace_back(s.items.begin(), s.items.begin() + s.train_end);
  }
  if (pool.size() < 2 || cfg.adv_steps == 0) return stats;
  GanTrainer trainer(generator, discriminator, item_embedding, cfg);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int step = 0; step < cfg.adv_steps; ++step) {
    std::vector<std::vector<ItemId>> batch;
    for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(pool[pick(rng)]);
    stats.adversarial.push_back(trainer.step(batch, cfg.temperature_at(step), rng));
  }
  return stats;
}

std::vector<SyntheticSequence> synthesize(const SplitCorpus& corpus, GeneratorParams& generator,
                                          const ad::Matrix& item_embedding, const AugmentConfig& cfg, Rng& rng) {
  if (!(cfg.rho_aug >= 0.0)) throw std::invalid_argument("synthesize: rho_aug must be >= 0");
  const auto count = static_cast<std::size_t>(std::llround(cfg.rho_aug * static_cast<double>(corpus.sequences.size())));
  std::vector<SyntheticSequence> out;
  if (count == 0 || corpus.sequences.empty()) return out;
  std::vector<std::size_t> order(corpus.sequences.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::uint64_t base = rng();
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0 && i % order.size() == 0) std::shuffle(order.begin(), order.end(), rng);
    const auto& src = corpus.sequences[order[i % order.size()]];
    const int L = src.train_end;
    if (L < 2) continue;
    const int p = prefix_length(L, cfg.prefix_frac);
    Rng seq_rng(derive_seed(base, i));
    std::span<const ItemId> prefix(src.items.data(), static_cast<std::size_t>(p));
    Continuation c = generate_continuation(prefix, L, GenerateOptions{cfg.temp_end, true}, seq_rng, generator,
                                           item_embedding);
    SyntheticSequence s;
    s.items.assign(prefix.begin(), prefix.end());
    s.items.insert(s.items.end(), c.hard.begin(), c.hard.end());
    s.origin_user = src.user_index;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<UserSequence> to_user_sequences(const std::vector<SyntheticSequence>& synthetic, const SplitCorpus& corpus) {
  std::vector<UserSequence> out;
  out.reserve(synthetic.size());
  for (const auto& s : synthetic) {
    UserSequence u;
    u.user_index = s.origin_user;
    u.user = corpus.sequences.at(static_cast<std::size_t>(s.origin_user)).user;
    u.items = s.items;
    u.train_end = u.valid_end = static_cast<std::int32_t>(s.items.size());
    u.synthetic = true;
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace uda4sr
