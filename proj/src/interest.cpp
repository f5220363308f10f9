#include "uda4sr/interest.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "uda4sr/errors.hpp"

namespace uda4sr {

void ModelConfig::validate() const {
  if (d < 1) throw ConfigError("model.d must be >= 1");
  if (n_heads < 1 || d % n_heads != 0) throw ConfigError("model.d must be divisible by model.n_heads");
  if (n_layers < 0) throw ConfigError("model.n_layers must be >= 0");
  if (k_capsules < 1) throw ConfigError("model.k_capsules must be >= 1");
  if (routing_iters < 1) throw ConfigError("model.routing_iters must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must be in [0, 1)");
  if (t_max < 1) throw ConfigError("model.t_max must be >= 1");
}

namespace {

Matrix xavier(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Matrix gaussian(int rows, int cols, double stddev, Rng& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

ModelParams ModelParams::init(std::int32_t num_items, const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, Stream::kInit));
  const int d = cfg.d;
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(d));
  ModelParams p;
  Matrix emb = gaussian(num_items + 1, d, emb_std, rng);
  emb.row(0).setZero();
  p.item_embedding = ad::Param("item_embedding", std::move(emb), true, true);
  p.position_embedding = ad::Param("position_embedding", gaussian(cfg.t_max, d, emb_std, rng));
  for (int l = 0; l < cfg.n_layers; ++l) {
    TransformerBlock b;
    const std::string pre = "block" + std::to_string(l) + ".";
    b.wq = ad::Param(pre + "wq", xavier(d, d, rng));
    b.wk = ad::Param(pre + "wk", xavier(d, d, rng));
    b.wv = ad::Param(pre + "wv", xavier(d, d, rng));
    b.wo = ad::Param(pre + "wo", xavier(d, d, rng));
    b.ln1_gain = ad::Param(pre + "ln1_gain", Matrix::Ones(1, d));
    b.ln1_bias = ad::Param(pre + "ln1_bias", Matrix::Zero(1, d));
    b.ff_w1 = ad::Param(pre + "ff_w1", xavier(d, d, rng));
    b.ff_b1 = ad::Param(pre + "ff_b1", Matrix::Zero(1, d));
    b.ff_w2 = ad::Param(pre + "ff_w2", xavier(d, d, rng));
    b.ff_b2 = ad::Param(pre + "ff_b2", Matrix::Zero(1, d));
    b.ln2_gain = ad::Param(pre + "ln2_gain", Matrix::Ones(1, d));
    b.ln2_bias = ad::Param(pre + "ln2_bias", Matrix::Zero(1, d));
    p.blocks.push_back(std::move(b));
  }
  p.routing = ad::Param("routing", xavier(d, d, rng));
  Rng routing_rng(derive_seed(seed, Stream::kRouting));
  p.routing_logit_init = gaussian(cfg.k_capsules, cfg.t_max, 1.0, routing_rng);
  return p;
}

std::vector<ad::Param*> ModelParams::params() {
  std::vector<ad::Param*> out{&item_embedding, &position_embedding};
  for (auto& b : blocks) {
    for (ad::Param* q : {&b.wq, &b.wk, &b.wv, &b.wo, &b.ln1_gain, &b.ln1_bias, &b.ff_w1, &b.ff_b1, &b.ff_w2,
                         &b.ff_b2, &b.ln2_gain, &b.ln2_bias}) {
      out.push_back(q);
    }
  }
  out.push_back(&routing);
  return out;
}

std::vector<const ad::Param*> ModelParams::params() const {
  auto mut = const_cast<ModelParams*>(this)->params();
  return {mut.begin(), mut.end()};
}

void ModelParams::zero_grad() {
  for (ad::Param* p : params()) p->zero_grad();
}

namespace {

ad::Var attention_block(ad::Tape& tape, const ad::Var& x, TransformerBlock& b, const ModelConfig& cfg,
                        const ForwardMode& mode) {
  const auto L = x.rows();
  const int dh = cfg.d / cfg.n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix causal = Matrix::Zero(L, L);
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = i + 1; j < L; ++j) causal(i, j) = -std::numeric_limits<double>::infinity();
  }
  ad::Var q = ad::matmul(x, tape.param(b.wq));
  ad::Var k = ad::matmul(x, tape.param(b.wk));
  ad::Var v = ad::matmul(x, tape.param(b.wv));
  std::vector<ad::Var> heads;
  for (int h = 0; h < cfg.n_heads; ++h) {
    ad::Var qh = ad::slice_cols(q, h * dh, dh);
    ad::Var kh = ad::slice_cols(k, h * dh, dh);
    ad::Var vh = ad::slice_cols(v, h * dh, dh);
    ad::Var scores = ad::add_const(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt), causal);
    heads.push_back(ad::matmul(ad::softmax_rows(scores), vh));
  }
  ad::Var attn = ad::matmul(ad::concat_cols(heads), tape.param(b.wo));
  if (mode.training && mode.dropout_rng) attn = ad::dropout(attn, cfg.dropout, *mode.dropout_rng);
  ad::Var x1 = ad::layer_norm_rows(ad::add(x, attn), tape.param(b.ln1_gain), tape.param(b.ln1_bias));

  ad::Var ff = ad::relu(ad::add_rowvec(ad::matmul(x1, tape.param(b.ff_w1)), tape.param(b.ff_b1)));
  ff = ad::add_rowvec(ad::matmul(ff, tape.param(b.ff_w2)), tape.param(b.ff_b2));
  if (mode.training && mode.dropout_rng) ff = ad::dropout(ff, cfg.dropout, *mode.dropout_rng);
  return ad::layer_norm_rows(ad::add(x1, ff), tape.param(b.ln2_gain), tape.param(b.ln2_bias));
}

}  // namespace

ad::Var encode_sequence(ad::Tape& tape, std::span<const ItemId> items, ModelParams& params, const ModelConfig& cfg,
                        const ForwardMode& mode) {
  if (items.empty()) throw BadLength("encode_sequence: empty sequence");
  if (items.size() > static_cast<std::size_t>(cfg.t_max)) throw SequenceTooLong(items.size(), static_cast<std::size_t>(cfg.t_max));
  const auto V = params.item_embedding.value.rows();
  for (ItemId it : items) {
    if (it <= kPadding || it >= V) throw std::out_of_range("encode_sequence: item index " + std::to_string(it));
  }
  std::vector<std::int32_t> positions(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) positions[i] = static_cast<std::int32_t>(i);
  ad::Var x = ad::add(ad::gather_rows(tape, params.item_embedding, items),
                      ad::gather_rows(tape, params.position_embedding, positions));
  if (mode.training && mode.dropout_rng) x = ad::dropout(x, cfg.dropout, *mode.dropout_rng);
  for (auto& block : params.blocks) x = attention_block(tape, x, block, cfg, mode);
  return x;
}

InterestVars capsule_routing(ad::Tape& tape, const ad::Var& H, const std::vector<bool>& mask, ModelParams& params,
                             const ModelConfig& cfg) {
  const auto L = H.rows();
  if (H.cols() != cfg.d) throw DimensionMismatch("capsule_routing: H width != d");
  if (L > cfg.t_max) throw SequenceTooLong(static_cast<std::size_t>(L), static_cast<std::size_t>(cfg.t_max));
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != L) {
    throw DimensionMismatch("capsule_routing: mask length != L");
  }
  std::vector<int> valid;
  for (Eigen::Index j = 0; j < L; ++j) {
    if (mask.empty() || mask[static_cast<std::size_t>(j)]) valid.push_back(static_cast<int>(j));
  }
  if (valid.empty()) throw AllMasked();
  const int K = cfg.k_capsules;

  ad::Var h_valid = static_cast<Eigen::Index>(valid.size()) == L ? H : ad::select_rows(H, valid);
  // Rows are ê_j = S·H_j.
  ad::Var e_hat = ad::matmul_nt(h_valid, tape.param(params.routing));
  // Logits kept as (valid positions)×K so the capsule softmax runs along rows.
  Matrix b0(static_cast<Eigen::Index>(valid.size()), K);
  for (std::size_t j = 0; j < valid.size(); ++j) {
    b0.row(static_cast<Eigen::Index>(j)) = params.routing_logit_init.col(valid[j]).transpose();
  }
  ad::Var logits = tape.constant(std::move(b0));

  InterestVars out;
  ad::Var capsules;
  Matrix coupling_valid;
  for (int it = 0; it < cfg.routing_iters; ++it) {
    ad::Var c = ad::softmax_rows(logits);
    coupling_valid = c.value();
    Matrix full = Matrix::Zero(K, L);
    for (std::size_t j = 0; j < valid.size(); ++j) full.col(valid[j]) = coupling_valid.row(static_cast<Eigen::Index>(j)).transpose();
    out.coupling_trace.push_back(full);
    ad::Var s = ad::matmul(ad::transpose(c), e_hat);
    capsules = ad::squash_rows(s);
    if (it + 1 < cfg.routing_iters) logits = ad::add(logits, ad::matmul_nt(e_hat, capsules));
  }
  out.capsules = capsules;
  out.coupling = out.coupling_trace.back();
  return out;
}

ad::Var target_attention_weights(const ad::Var& capsules, const ad::Var& targets) {
  if (capsules.cols() != targets.cols()) throw DimensionMismatch("target_attention: width mismatch");
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(capsules.cols()));
  return ad::softmax_rows(ad::scale(ad::matmul_nt(targets, capsules), inv_sqrt));
}

ad::Var target_attention(const ad::Var& capsules, const ad::Var& targets) {
  return ad::matmul(target_attention_weights(capsules, targets), capsules);
}

ad::Var score(const ad::Var& preference, const ad::Var& targets) {
  return ad::sigmoid(ad::row_dot(preference, targets));
}

Eigen::VectorXd squash(const Eigen::VectorXd& s) {
  const double n2 = s.squaredNorm();
  if (n2 == 0.0) return Eigen::VectorXd::Zero(s.size());
  return s * (std::sqrt(n2) / (1.0 + n2));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

InterestSet extract_interests(std::span<const ItemId> history, ModelParams& params, const ModelConfig& cfg) {
  ad::Tape tape;
  ad::Var H = encode_sequence(tape, history, params, cfg);
  InterestVars iv = capsule_routing(tape, H, {}, params, cfg);
  return {iv.capsules.value(), iv.coupling};
}

Eigen::VectorXd score_all(const InterestSet& interests, const Matrix& item_embedding) {
  const Matrix& U = interests.capsules;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(U.cols()));
  Matrix logits = item_embedding * U.transpose() * inv_sqrt;  // N×K
  Eigen::VectorXd out(item_embedding.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::RowVectorXd a = (logits.row(i).array() - logits.row(i).maxCoeff()).exp();
    a /= a.sum();
    const Eigen::RowVectorXd v = a * U;
    out(i) = v.dot(item_embedding.row(i));
  }
  return out;
}

}  // namespace uda4sr
