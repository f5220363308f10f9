#pragma once

// Synthetic corpus with known interest structure: items split into disjoint
// clusters, each user alternating between a few of them.

#include <cstdint>
#include <vector>

#include "uda4sr/corpus.hpp"

namespace uda4sr {

struct PlantedConfig {
  int users = 300;
  int items = 120;
  int clusters = 4;
  int clusters_per_user = 2;
  int length = 30;
  double stay = 0.8;  // probability the next item comes from the current cluster
  std::uint64_t seed = 7;
};

struct PlantedCorpus {
  std::vector<Interaction> interactions;
  // Cluster of each item id string, by numeric suffix: item "i007" is item 7.
  std::vector<int> item_cluster;  // indexed 1..items
  std::vector<std::vector<int>> user_clusters;
};

// Ids are zero-padded ("u007", "i042") so lexicographic order matches numeric
// order and vocab index k is item k.
PlantedCorpus make_planted_corpus(const PlantedConfig& cfg);

}  // namespace uda4sr
