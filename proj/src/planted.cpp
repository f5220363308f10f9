#include "uda4sr/planted.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "uda4sr/rng.hpp"

namespace uda4sr {

namespace {

std::string padded(char prefix, int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%04d", prefix, n);
  return buf;
}

}  // namespace

PlantedCorpus make_planted_corpus(const PlantedConfig& cfg) {
  if (cfg.clusters < 1 || cfg.items % cfg.clusters != 0) {
    throw std::invalid_argument("planted corpus: items must split evenly into clusters");
  }
  if (cfg.clusters_per_user < 1 || cfg.clusters_per_user > cfg.clusters || cfg.length < 1 || cfg.users < 1) {
    throw std::invalid_argument("planted corpus: bad shape");
  }
  const int per_cluster = cfg.items / cfg.clusters;
  PlantedCorpus out;
  out.item_cluster.assign(static_cast<std::size_t>(cfg.items) + 1, -1);
  for (int i = 1; i <= cfg.items; ++i) out.item_cluster[static_cast<std::size_t>(i)] = (i - 1) / per_cluster;

  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> within(0, per_cluster - 1);
  std::vector<int> all(static_cast<std::size_t>(cfg.clusters));
  std::iota(all.begin(), all.end(), 0);
  for (int u = 1; u <= cfg.users; ++u) {
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<int> mine(all.begin(), all.begin() + cfg.clusters_per_user);
    std::sort(mine.begin(), mine.end());
    std::uniform_int_distribution<std::size_t> pick(0, mine.size() - 1);
    std::size_t current = pick(rng);
    for (int t = 0; t < cfg.length; ++t) {
      if (t > 0 && mine.size() > 1 && unit(rng) >= cfg.stay) {
        std::uniform_int_distribution<std::size_t> other(0, mine.size() - 2);
        const std::size_t o = other(rng);
        current = o >= current ? o + 1 : o;
      }
      const int item = mine[current] * per_cluster + within(rng) + 1;
      out.interactions.push_back({padded('u', u), padded('i', item), t});
    }
    out.user_clusters.push_back(std::move(mine));
  }
  return out;
}

}  // namespace uda4sr
