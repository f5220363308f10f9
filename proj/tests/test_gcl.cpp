#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <tuple>
#include <numeric>
#include <random>

#include "uda4sr/errors.hpp"
#include "uda4sr/gcl.hpp"

using namespace uda4sr;
using ad::Matrix;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Matrix unit_rows(Matrix m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i).normalize();
  return m;
}

double nce(const Matrix& a, const Matrix& b, double tau) {
  ad::Tape t;
  return info_nce(t.constant(a), t.constant(b), tau).scalar();
}

Eigen::VectorXd relu(const Eigen::VectorXd& v) { return v.cwiseMax(0.0); }

// Per-node loop version of the two-layer weighted-mean GNN.
std::vector<Eigen::VectorXd> loop_gnn(const SubgraphView& view, const Matrix& emb, const Matrix& W0,
                                      const Matrix& W1) {
  const std::size_t N = view.nodes.size();
  std::vector<Eigen::VectorXd> h(N);
  for (std::size_t i = 0; i < N; ++i) h[i] = emb.row(view.nodes[i]).transpose();
  for (const Matrix* W : {&W0, &W1}) {
    std::vector<Eigen::VectorXd> next(N);
    for (std::size_t i = 0; i < N; ++i) {
      Eigen::VectorXd m = Eigen::VectorXd::Zero(emb.cols());
      double total = 0.0;
      for (const auto& e : view.edges) {
        ItemId other = -1;
        if (e.a == view.nodes[i]) other = e.b;
        if (e.b == view.nodes[i]) other = e.a;
        if (other < 0) continue;
        const auto j = static_cast<std::size_t>(std::find(view.nodes.begin(), view.nodes.end(), other) - view.nodes.begin());
        m += e.weight * h[j];
        total += e.weight;
      }
      if (total > 0) m /= total;
      Eigen::VectorXd cat(2 * emb.cols());
      cat << h[i], m;
      next[i] = relu(*W * cat);
    }
    h = std::move(next);
  }
  std::vector<Eigen::VectorXd> out;
  for (ItemId s : view.seed_items) {
    const auto j = static_cast<std::size_t>(std::find(view.nodes.begin(), view.nodes.end(), s) - view.nodes.begin());
    out.push_back(h[j] / std::max(h[j].norm(), 1e-12));
  }
  return out;
}

}  // namespace

TEST(InfoNce, IdenticalBatchIsLogB) {
  for (int B : {2, 4, 16}) {
    Matrix z(B, 5);
    z.rowwise() = unit_rows(random_matrix(1, 5, 3)).row(0);
    EXPECT_NEAR(nce(z, z, 0.2), std::log(B), 1e-9) << "B=" << B;
  }
}

TEST(InfoNce, OrthogonalPositivesClosedForm) {
  const Matrix z = Matrix::Identity(4, 6);
  const double expected = -std::log(std::exp(5.0) / (std::exp(5.0) + 3.0));
  EXPECT_NEAR(nce(z, z, 0.2), expected, 1e-6);
  EXPECT_NEAR(expected, 0.0200, 5e-5);
}

TEST(InfoNce, BoundsAndPermutationInvariance) {
  const double tau = 0.2;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrix a = unit_rows(random_matrix(6, 4, seed));
    const Matrix b = unit_rows(random_matrix(6, 4, seed + 100));
    const double loss = nce(a, b, tau);
    EXPECT_GE(loss, 0.0);
    EXPECT_LE(loss, std::log(6.0) + 2.0 / tau);
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(seed));
    Matrix pa(6, 4), pb(6, 4);
    for (int i = 0; i < 6; ++i) {
      pa.row(i) = a.row(perm[static_cast<std::size_t>(i)]);
      pb.row(i) = b.row(perm[static_cast<std::size_t>(i)]);
    }
    EXPECT_NEAR(nce(pa, pb, tau), loss, 1e-12);
  }
}

TEST(InfoNce, MoreAlignedPositivesLowerLoss) {
  const Matrix a = unit_rows(random_matrix(5, 4, 8));
  const Matrix noise = unit_rows(random_matrix(5, 4, 9));
  double prev = std::numeric_limits<double>::infinity();
  for (double mix : {0.0, 0.3, 0.6, 0.9}) {
    Matrix b = unit_rows(mix * a + (1.0 - mix) * noise);
    const double loss = nce(a, b, 0.2);
    EXPECT_LT(loss, prev) << "mix " << mix;
    prev = loss;
  }
}

TEST(InfoNce, GradientMatchesFiniteDifferences) {
  ad::Param z1("z1", random_matrix(4, 3, 1)), z2("z2", random_matrix(4, 3, 2));
  auto loss = [&](bool backprop) {
    ad::Tape t;
    ad::Var l = info_nce(t.param(z1), t.param(z2), 0.2);
    if (backprop) t.backward(l);
    return l.scalar();
  };
  loss(true);
  for (ad::Param* p : {&z1, &z2}) {
    Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      const double orig = p->value.data()[k];
      p->value.data()[k] = orig + 1e-5;
      const double up = loss(false);
      p->value.data()[k] = orig - 1e-5;
      const double down = loss(false);
      p->value.data()[k] = orig;
      numeric.data()[k] = (up - down) / 2e-5;
    }
    EXPECT_LT((numeric - p->grad).norm() / numeric.norm(), 1e-4) << p->name;
  }
}

TEST(InfoNce, RejectsTinyBatch) {
  ad::Tape t;
  EXPECT_THROW(info_nce(t.constant(Matrix::Ones(1, 3)), t.constant(Matrix::Ones(1, 3)), 0.2), BatchTooSmall);
}

TEST(GnnEncode, IsolatedSeedReduction) {
  const int d = 3;
  ad::Param emb("emb", random_matrix(4, d, 5), true, true);
  GnnParams params = GnnParams::init(d, 1);
  SubgraphView view;
  view.seed_items = view.nodes = {2};
  view.hop = {0};
  ad::Tape t;
  const Eigen::VectorXd got = gnn_encode(t, view, emb, params).value().row(0).transpose();
  Eigen::VectorXd x(2 * d);
  x << emb.value.row(2).transpose(), Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd h1 = relu(params.layer0.value * x);
  x << h1, Eigen::VectorXd::Zero(d);
  Eigen::VectorXd h2 = relu(params.layer1.value * x);
  if (h2.norm() > 0) h2 /= h2.norm();
  EXPECT_LT((got - h2).norm(), 1e-12);
}

TEST(GnnEncode, PathGraphMatchesLoopOracle) {
  const int d = 3;
  const auto graph = ItemGraph::from_edges(6, GraphStage::kPruned, {{1, 2, 0.5}, {2, 3, 1.5}, {3, 4, 0.7}, {4, 5, 2.0}});
  ad::Param emb("emb", random_matrix(6, d, 17), true, true);
  emb.value.row(0).setZero();
  GnnParams params = GnnParams::init(d, 3);
  Rng rng(4);
  const std::vector<ItemId> seeds{3, 1};
  const SubgraphView view = sample_subgraph(graph, seeds, 2, 10, rng);
  ad::Tape t;
  const Matrix got = gnn_encode(t, view, emb, params).value();
  const auto oracle = loop_gnn(view, emb.value, params.layer0.value, params.layer1.value);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    EXPECT_LT((got.row(static_cast<Eigen::Index>(i)).transpose() - oracle[i]).norm(), 1e-10);
    const double n = got.row(static_cast<Eigen::Index>(i)).norm();
    EXPECT_TRUE(std::abs(n - 1.0) < 1e-12 || n == 0.0);
  }
  ad::Tape t2;
  EXPECT_EQ(gnn_encode(t2, view, emb, params).value(), got);
}

TEST(GnnEncode, RejectsWrongWidth) {
  ad::Param emb("emb", random_matrix(4, 3, 5));
  GnnParams params = GnnParams::init(4, 1);
  SubgraphView view;
  view.seed_items = view.nodes = {1};
  view.hop = {0};
  ad::Tape t;
  EXPECT_THROW(gnn_encode(t, view, emb, params), DimensionMismatch);
}

TEST(MakeViews, SaturatedGraphGivesIdenticalViews) {
  const auto graph = ItemGraph::from_edges(6, GraphStage::kPruned, {{1, 2, 1.0}, {2, 3, 1.0}, {1, 4, 2.0}});
  GraphConfig cfg;
  Rng rng(5);
  const std::vector<ItemId> items{1, 3};
  const auto [a, b] = make_views(graph, items, cfg, rng);
  EXPECT_EQ(a, b);
  cfg.hops = 0;
  const auto [c, e] = make_views(graph, items, cfg, rng);
  EXPECT_EQ(c.nodes, items);
  EXPECT_TRUE(c.edges.empty() && e.edges.empty());
}

TEST(MakeViews, DenseGraphViewsUsuallyDiffer) {
  std::vector<std::tuple<ItemId, ItemId, double>> edges;
  for (ItemId i = 1; i <= 30; ++i) {
    for (ItemId j = i + 1; j <= 30; ++j) edges.emplace_back(i, j, 1.0 + (i * j) % 7);
  }
  const auto graph = ItemGraph::from_edges(31, GraphStage::kPruned, edges);
  GraphConfig cfg;
  cfg.fanout = 3;
  Rng rng(99);
  const std::vector<ItemId> items{1, 2, 3};
  int differ = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto [a, b] = make_views(graph, items, cfg, rng);
    auto key = [](const SubgraphEdge& x, const SubgraphEdge& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); };
    std::sort(a.edges.begin(), a.edges.end(), key);
    std::sort(b.edges.begin(), b.edges.end(), key);
    if (a.edges != b.edges) ++differ;
  }
  EXPECT_GE(differ, 95);
}
