#pragma once

// Sequence augmentation with a recurrent generator and a pooled-embedding
// discriminator. Discrete tokens cross the generator with straight-through
// Gumbel-softmax; a batch-entropy penalty discourages mode collapse.

#include <cstdint>
#include <span>
#include <vector>

#include "uda4sr/autodiff.hpp"
#include "uda4sr/corpus.hpp"
#include "uda4sr/optim.hpp"
#include "uda4sr/rng.hpp"

namespace uda4sr {

struct AugmentConfig {
  double prefix_frac = 0.5;
  double rho_aug = 0.2;
  double temp_start = 1.0;
  double temp_end = 0.5;
  double eta_div = 0.1;
  int mle_epochs = 3;
  int adv_steps = 200;
  int batch_size = 16;
  double lr = 5e-3;

  void validate() const;
  // Linear anneal from temp_start to temp_end over adv_steps.
  double temperature_at(int step) const;
};

struct GeneratorParams {
  ad::Param w_in;      // d×d
  ad::Param w_hidden;  // d×d
  ad::Param bias;      // 1×d
  ad::Param w_out;     // d×(V+1); column 0 (padding) never produces mass
  ad::Param b_out;     // 1×(V+1)

  static GeneratorParams init(std::int32_t num_items, int d, std::uint64_t seed);
  std::vector<ad::Param*> params() { return {&w_in, &w_hidden, &bias, &w_out, &b_out}; }
  int hidden() const { return static_cast<int>(w_in.value.cols()); }
  std::int32_t num_items() const { return static_cast<std::int32_t>(w_out.value.cols()) - 1; }
};

struct DiscriminatorParams {
  ad::Param w1;  // d×d
  ad::Param b1;  // 1×d
  ad::Param w2;  // d×1
  ad::Param b2;  // 1×1

  static DiscriminatorParams init(int d, std::uint64_t seed);
  std::vector<ad::Param*> params() { return {&w1, &b1, &w2, &b2}; }
};

struct SyntheticSequence {
  std::vector<ItemId> items;
  std::int32_t origin_user = 0;
  bool synthetic = true;

  bool operator==(const SyntheticSequence&) const = default;
};

struct GenerateOptions {
  double temperature = 1.0;
  bool gumbel_noise = true;
};

// Distributions are over real items: entry k is item k + 1.
struct GeneratedVars {
  std::vector<ad::Var> soft;  // one 1×V row per generated step
  std::vector<ItemId> hard;
};

struct Continuation {
  ad::Matrix soft;  // steps×V
  std::vector<ItemId> hard;
};

// `item_embedding` is the shared (V+1)×d table, read-only here.
GeneratedVars generate_on_tape(ad::Tape& tape, std::span<const ItemId> prefix, int target_len,
                               const GenerateOptions& opts, Rng& rng, GeneratorParams& params,
                               const ad::Matrix& item_embedding);

Continuation generate_continuation(std::span<const ItemId> prefix, int target_len, const GenerateOptions& opts,
                                   Rng& rng, GeneratorParams& params, const ad::Matrix& item_embedding);

// ln V - H(mean distribution). Each row of each matrix must lie on the simplex.
double diversity_penalty(std::span<const ad::Matrix> soft_batch);
ad::Var diversity_penalty(std::span<const ad::Var> soft_rows);

// Teacher-forced next-item cross-entropy of one sequence (on the tape).
ad::Var generator_nll(ad::Tape& tape, std::span<const ItemId> items, GeneratorParams& params,
                      const ad::Matrix& item_embedding);

// Returns the mean training cross-entropy of every epoch.
std::vector<double> pretrain_generator_mle(const SplitCorpus& corpus, GeneratorParams& params,
                                           const ad::Matrix& item_embedding, int epochs, const AugmentConfig& cfg,
                                           Rng& rng);

// Probability that each sequence embedding (mean-pooled rows) is real. B×1.
ad::Var discriminate(ad::Tape& tape, std::span<const ad::Var> sequence_embeddings, DiscriminatorParams& params);

struct AdversarialLosses {
  double loss_d = 0.0;
  double loss_g = 0.0;
  double diversity = 0.0;
};

// Alternating discriminator / generator updates with their own optimizers.
class GanTrainer {
 public:
  GanTrainer(GeneratorParams& generator, DiscriminatorParams& discriminator, const ad::Matrix& item_embedding,
             const AugmentConfig& cfg);

  // One D step on detached fakes then one G step. Prefixes are the first
  // ceil(prefix_frac·L) items of each real sequence.
  AdversarialLosses step(std::span<const std::vector<ItemId>> real_batch, double temperature, Rng& rng);

  // Generator objective with the fakes fed to D as soft mixtures (no straight-through),
  // accumulated into generator grads. For gradient checks.
  double generator_loss_soft(std::span<const std::vector<ItemId>> real_batch, double temperature,
                             std::uint64_t noise_seed);

  // Fraction of real sequences scored > 0.5 and fakes scored < 0.5.
  double discriminator_accuracy(std::span<const std::vector<ItemId>> real, std::span<const std::vector<ItemId>> fake);

 private:
  std::vector<ad::Var> embed_real(ad::Tape& tape, std::span<const std::vector<ItemId>> batch) const;

  GeneratorParams& g_;
  DiscriminatorParams& d_;
  const ad::Matrix& emb_;
  AugmentConfig cfg_;
  Adam g_opt_;
  Adam d_opt_;
};

int prefix_length(int length, double prefix_frac);

// Full augmentation run: MLE pretraining then adversarial steps.
struct GanRunStats {
  std::vector<double> mle_curve;
  std::vector<AdversarialLosses> adversarial;
};
GanRunStats train_gan(const SplitCorpus& corpus, GeneratorParams& generator, DiscriminatorParams& discriminator,
                      const ad::Matrix& item_embedding, const AugmentConfig& cfg, Rng& rng);

// round(rho_aug · |sequences|) synthetic sequences from real train-region prefixes.
std::vector<SyntheticSequence> synthesize(const SplitCorpus& corpus, GeneratorParams& generator,
                                          const ad::Matrix& item_embedding, const AugmentConfig& cfg, Rng& rng);

// Synthetic sequences as corpus rows: whole length is train region, user id of the source.
std::vector<UserSequence> to_user_sequences(const std::vector<SyntheticSequence>& synthetic, const SplitCorpus& corpus);

}  // namespace uda4sr
