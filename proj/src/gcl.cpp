#include "uda4sr/gcl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uda4sr/errors.hpp"

namespace uda4sr {

void ContrastConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("contrast.tau must be > 0");
  if (!(lambda_cl >= 0.0)) throw ConfigError("contrast.lambda_cl must be >= 0");
}

GnnParams GnnParams::init(int d, std::uint64_t seed) {
  Rng rng(derive_seed(derive_seed(seed, Stream::kInit), 0x676e6eULL));
  const double bound = std::sqrt(6.0 / static_cast<double>(3 * d));
  std::uniform_real_distribution<double> u(-bound, bound);
  auto make = [&](const char* name) {
    ad::Matrix m(d, 2 * d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return ad::Param(name, std::move(m));
  };
  GnnParams p;
  p.layer0 = make("gnn.layer0");
  p.layer1 = make("gnn.layer1");
  return p;
}

void GnnParams::zero_grad() {
  layer0.zero_grad();
  layer1.zero_grad();
}

ad::Matrix view_mean_operator(const SubgraphView& view) {
  const auto N = static_cast<Eigen::Index>(view.nodes.size());
  std::unordered_map<ItemId, Eigen::Index> local;
  for (Eigen::Index i = 0; i < N; ++i) local.emplace(view.nodes[static_cast<std::size_t>(i)], i);
  ad::Matrix A = ad::Matrix::Zero(N, N);
  for (const auto& e : view.edges) {
    if (!(e.weight > 0.0)) throw Error("view edge weights must be positive");
    const Eigen::Index a = local.at(e.a);
    const Eigen::Index b = local.at(e.b);
    A(a, b) += e.weight;
    A(b, a) += e.weight;
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    const double s = A.row(i).sum();
    if (s > 0.0) A.row(i) /= s;
  }
  return A;
}

ad::Var gnn_encode(ad::Tape& tape, const SubgraphView& view, ad::Param& item_embedding, GnnParams& params) {
  const auto d = item_embedding.value.cols();
  if (params.layer0.value.rows() != d || params.layer0.value.cols() != 2 * d || params.layer1.value.rows() != d ||
      params.layer1.value.cols() != 2 * d) {
    throw DimensionMismatch("gnn_encode: layer weights must be d×2d");
  }
  ad::Var A = tape.constant(view_mean_operator(view));
  ad::Var h = ad::gather_rows(tape, item_embedding, view.nodes);
  for (ad::Param* w : {&params.layer0, &params.layer1}) {
    ad::Var m = ad::matmul(A, h);
    h = ad::relu(ad::matmul_nt(ad::concat_cols(h, m), tape.param(*w)));
  }
  std::vector<int> seed_rows;
  for (ItemId s : view.seed_items) {
    const auto it = std::find(view.nodes.begin(), view.nodes.end(), s);
    seed_rows.push_back(static_cast<int>(it - view.nodes.begin()));
  }
  return ad::normalize_rows(ad::select_rows(h, seed_rows), 1e-12);
}

std::unordered_map<ItemId, Eigen::VectorXd> gnn_encode_items(const SubgraphView& view, ad::Param& item_embedding,
                                                             GnnParams& params) {
  ad::Tape tape;
  ad::Var z = gnn_encode(tape, view, item_embedding, params);
  std::unordered_map<ItemId, Eigen::VectorXd> out;
  for (std::size_t i = 0; i < view.seed_items.size(); ++i) {
    out[view.seed_items[i]] = z.value().row(static_cast<Eigen::Index>(i)).transpose();
  }
  return out;
}

std::pair<SubgraphView, SubgraphView> make_views(const ItemGraph& graph, std::span<const ItemId> items,
                                                 const GraphConfig& cfg, Rng& rng) {
  const std::uint64_t base = rng();
  Rng first(derive_seed(base, 1));
  Rng second(derive_seed(base, 2));
  SubgraphView a = sample_subgraph(graph, items, cfg.hops, cfg.fanout, first);
  SubgraphView b = sample_subgraph(graph, items, cfg.hops, cfg.fanout, second);
  return {std::move(a), std::move(b)};
}

ad::Var info_nce_directed(const ad::Var& z1, const ad::Var& z2, double tau) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols()) throw DimensionMismatch("info_nce: batch shapes differ");
  if (z1.rows() < 2) throw BatchTooSmall(static_cast<std::size_t>(z1.rows()));
  if (!(tau > 0.0)) throw std::invalid_argument("info_nce: tau must be > 0");
  ad::Var n1 = ad::normalize_rows(z1, 1e-12);
  ad::Var n2 = ad::normalize_rows(z2, 1e-12);
  ad::Var logits = ad::scale(ad::matmul_nt(n1, n2), 1.0 / tau);
  std::vector<int> diag(static_cast<std::size_t>(z1.rows()));
  std::iota(diag.begin(), diag.end(), 0);
  return ad::softmax_xent_rows(logits, diag);
}

ad::Var info_nce(const ad::Var& z1, const ad::Var& z2, double tau) {
  return ad::scale(ad::add(info_nce_directed(z1, z2, tau), info_nce_directed(z2, z1, tau)), 0.5);
}

}  // namespace uda4sr
