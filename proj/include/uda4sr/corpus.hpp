#pragma once

// Interaction-log ingestion: parse, filter sparse users/items, encode ids,
// build capped time-ordered sequences, and split each one temporally.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace uda4sr {

using ItemId = std::int32_t;
inline constexpr ItemId kPadding = 0;

struct Interaction {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

// Dense item ids. Index 0 is padding; real items occupy [1, V].
class Vocab {
 public:
  Vocab() : index_to_item_{""} {}

  // Items are indexed in the order given (duplicates ignored).
  static Vocab from_items(const std::vector<std::string>& items);

  ItemId add(const std::string& item);
  ItemId index_of(const std::string& item) const;  // throws std::out_of_range
  bool contains(const std::string& item) const { return item_to_index_.count(item) != 0; }
  const std::string& item_at(ItemId index) const;
  // Number of real items V.
  std::int32_t size() const { return static_cast<std::int32_t>(index_to_item_.size()) - 1; }
  const std::vector<std::string>& items() const { return index_to_item_; }

  bool operator==(const Vocab& o) const { return index_to_item_ == o.index_to_item_; }

 private:
  std::unordered_map<std::string, ItemId> item_to_index_;
  std::vector<std::string> index_to_item_;
};

struct UserSequence {
  std::int32_t user_index = 0;
  std::string user;
  std::vector<ItemId> items;
  // Train region [0, train_end), validation [train_end, valid_end), test [valid_end, L).
  std::int32_t train_end = 0;
  std::int32_t valid_end = 0;
  bool synthetic = false;

  std::int32_t length() const { return static_cast<std::int32_t>(items.size()); }
  bool operator==(const UserSequence&) const = default;
};

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct SplitCorpus {
  std::vector<UserSequence> sequences;
  Vocab vocab;
  // Per item index, number of train-region events. Size V + 1; entry 0 stays 0.
  std::vector<std::int64_t> item_freq;
  std::size_t dropped_count = 0;

  std::int32_t num_items() const { return vocab.size(); }
  bool operator==(const SplitCorpus&) const = default;
};

// Reads a UTF-8 TSV of user, item, timestamp. The header line
// `user_id<TAB>item_id<TAB>timestamp` is skipped when present.
std::vector<Interaction> load_interactions(const std::filesystem::path& path);
std::vector<Interaction> parse_interactions(std::istream& in);

// Iterates user and item minimum-count filters to a fixpoint.
std::vector<Interaction> filter_min_support(const std::vector<Interaction>& interactions,
                                            int min_count = 15);

struct SequenceSet {
  std::vector<UserSequence> sequences;
  Vocab vocab;
};

// Users and items are indexed in lexicographic id order, so the output does
// not depend on row order beyond timestamp ties.
SequenceSet build_sequences(const std::vector<Interaction>& interactions, int t_max = 50);

// Positional cut indices for one sequence of length L (requires L >= 5).
std::array<std::int32_t, 2> split_marks(std::int32_t length, const SplitRatios& ratios = {});

SplitCorpus split_temporal(SequenceSet set, const SplitRatios& ratios = {});

// Recomputes train-region item counts from the sequences.
std::vector<std::int64_t> train_item_frequency(const std::vector<UserSequence>& sequences,
                                               std::int32_t num_items);

// Corpus cache: {vocab, sequences:[{user, items, train_end, valid_end}], dropped_count}.
nlohmann::json corpus_to_json(const SplitCorpus& corpus);
SplitCorpus corpus_from_json(const nlohmann::json& j);
void save_corpus(const SplitCorpus& corpus, const std::filesystem::path& path);
SplitCorpus load_corpus(const std::filesystem::path& path);

}  // namespace uda4sr
