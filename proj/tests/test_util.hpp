#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "uda4sr/corpus.hpp"

namespace uda4sr::test {

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("uda4sr_test_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Corpus with explicit item sequences over V items; every sequence is split by
// the standard rule. Item k is named "i<k>".
inline SplitCorpus make_corpus(std::int32_t V, const std::vector<std::vector<ItemId>>& seqs) {
  SequenceSet set;
  for (ItemId k = 1; k <= V; ++k) set.vocab.add("i" + std::to_string(k));
  std::int32_t u = 0;
  for (const auto& items : seqs) {
    UserSequence s;
    s.user_index = u;
    s.user = "u" + std::to_string(u++);
    s.items = items;
    s.train_end = s.valid_end = s.length();
    set.sequences.push_back(std::move(s));
  }
  return split_temporal(std::move(set));
}

inline SplitCorpus random_corpus(std::int32_t V, int users, int min_len, int max_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<ItemId> item(1, V);
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::vector<std::vector<ItemId>> seqs;
  for (int u = 0; u < users; ++u) {
    std::vector<ItemId> s(static_cast<std::size_t>(len(rng)));
    for (auto& x : s) x = item(rng);
    seqs.push_back(std::move(s));
  }
  return make_corpus(V, seqs);
}

}  // namespace uda4sr::test
