#include "uda4sr/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "uda4sr/errors.hpp"

namespace uda4sr {

namespace {

constexpr std::string_view kHeader = "user_id\titem_id\ttimestamp";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

Vocab Vocab::from_items(const std::vector<std::string>& items) {
  Vocab v;
  for (const auto& it : items) v.add(it);
  return v;
}

ItemId Vocab::add(const std::string& item) {
  auto [it, inserted] = item_to_index_.try_emplace(item, static_cast<ItemId>(index_to_item_.size()));
  if (inserted) index_to_item_.push_back(item);
  return it->second;
}

ItemId Vocab::index_of(const std::string& item) const {
  auto it = item_to_index_.find(item);
  if (it == item_to_index_.end()) throw std::out_of_range("unknown item: " + item);
  return it->second;
}

const std::string& Vocab::item_at(ItemId index) const {
  if (index <= kPadding || index >= static_cast<ItemId>(index_to_item_.size())) {
    throw std::out_of_range("item index out of range: " + std::to_string(index));
  }
  return index_to_item_[static_cast<std::size_t>(index)];
}

std::vector<Interaction> parse_interactions(std::istream& in) {
  std::vector<Interaction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line == kHeader) continue;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw MalformedLine(line_no, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw MalformedLine(line_no, "empty user or item id");
    std::int64_t ts = 0;
    const auto ts_field = fields[2];
    auto [ptr, ec] = std::from_chars(ts_field.data(), ts_field.data() + ts_field.size(), ts);
    if (ec != std::errc() || ptr != ts_field.data() + ts_field.size()) {
      throw MalformedLine(line_no, "timestamp is not an integer");
    }
    if (ts < 0) throw MalformedLine(line_no, "negative timestamp");
    out.push_back(Interaction{std::string(fields[0]), std::string(fields[1]), ts});
  }
  return out;
}

std::vector<Interaction> load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());
  return parse_interactions(in);
}

std::vector<Interaction> filter_min_support(const std::vector<Interaction>& interactions, int min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::vector<Interaction> current = interactions;
  while (true) {
    std::unordered_map<std::string, int> users;
    std::unordered_map<std::string, int> items;
    for (const auto& x : current) {
      ++users[x.user];
      ++items[x.item];
    }
    std::vector<Interaction> next;
    next.reserve(current.size());
    for (const auto& x : current) {
      if (users[x.user] >= min_count && items[x.item] >= min_count) next.push_back(x);
    }
    if (next.size() == current.size()) break;
    current = std::move(next);
  }
  if (current.empty()) throw EmptyAfterFilter();
  return current;
}

SequenceSet build_sequences(const std::vector<Interaction>& interactions, int t_max) {
  if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  // std::map keeps users in lexicographic order.
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < interactions.size(); ++i) by_user[interactions[i].user].push_back(i);

  // Only items that survive truncation enter the vocabulary.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> kept;
  kept.reserve(by_user.size());
  std::vector<std::string> surviving;
  for (auto& [user, rows] : by_user) {
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return interactions[a].timestamp < interactions[b].timestamp;
    });
    if (rows.size() > static_cast<std::size_t>(t_max)) {
      rows.erase(rows.begin(), rows.end() - t_max);
    }
    for (std::size_t r : rows) surviving.push_back(interactions[r].item);
    kept.emplace_back(user, std::move(rows));
  }
  std::sort(surviving.begin(), surviving.end());
  surviving.erase(std::unique(surviving.begin(), surviving.end()), surviving.end());

  SequenceSet out;
  out.vocab = Vocab::from_items(surviving);
  out.sequences.reserve(kept.size());
  std::int32_t user_index = 0;
  for (auto& [user, rows] : kept) {
    UserSequence s;
    s.user_index = user_index++;
    s.user = user;
    s.items.reserve(rows.size());
    for (std::size_t r : rows) s.items.push_back(out.vocab.index_of(interactions[r].item));
    s.train_end = s.valid_end = s.length();
    out.sequences.push_back(std::move(s));
  }
  return out;
}

std::array<std::int32_t, 2> split_marks(std::int32_t length, const SplitRatios& ratios) {
  if (length < 5) throw std::invalid_argument("split_marks: sequence shorter than 5");
  // The small slack keeps products such as 0.9 * 10 from flooring to 8.
  constexpr double kSlack = 1e-9;
  const double L = static_cast<double>(length);
  std::int32_t train_end = static_cast<std::int32_t>(std::floor(ratios.train * L + kSlack));
  train_end = std::clamp(train_end, 1, length - 2);
  std::int32_t valid_end = static_cast<std::int32_t>(std::floor((ratios.train + ratios.valid) * L + kSlack));
  valid_end = std::clamp(valid_end, train_end + 1, length - 1);
  return {train_end, valid_end};
}

std::vector<std::int64_t> train_item_frequency(const std::vector<UserSequence>& sequences,
                                               std::int32_t num_items) {
  std::vector<std::int64_t> freq(static_cast<std::size_t>(num_items) + 1, 0);
  for (const auto& s : sequences) {
    for (std::int32_t p = 0; p < s.train_end; ++p) ++freq[static_cast<std::size_t>(s.items[p])];
  }
  return freq;
}

SplitCorpus split_temporal(SequenceSet set, const SplitRatios& ratios) {
  if (ratios.train <= 0 || ratios.valid <= 0 || ratios.test <= 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must be positive and sum to 1");
  }
  SplitCorpus out;
  out.vocab = std::move(set.vocab);
  for (auto& s : set.sequences) {
    if (s.length() < 5) {
      ++out.dropped_count;
      continue;
    }
    const auto marks = split_marks(s.length(), ratios);
    s.train_end = marks[0];
    s.valid_end = marks[1];
    s.user_index = static_cast<std::int32_t>(out.sequences.size());
    out.sequences.push_back(std::move(s));
  }
  out.item_freq = train_item_frequency(out.sequences, out.vocab.size());
  return out;
}

nlohmann::json corpus_to_json(const SplitCorpus& corpus) {
  nlohmann::json vocab = nlohmann::json::array();
  for (std::size_t i = 1; i < corpus.vocab.items().size(); ++i) vocab.push_back(corpus.vocab.items()[i]);
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& s : corpus.sequences) {
    nlohmann::json js = {{"user", s.user}, {"items", s.items}, {"train_end", s.train_end},
                         {"valid_end", s.valid_end}};
    if (s.synthetic) js["synthetic"] = true;
    seqs.push_back(std::move(js));
  }
  return {{"vocab", std::move(vocab)}, {"sequences", std::move(seqs)}, {"dropped_count", corpus.dropped_count}};
}

SplitCorpus corpus_from_json(const nlohmann::json& j) {
  SplitCorpus out;
  out.vocab = Vocab::from_items(j.at("vocab").get<std::vector<std::string>>());
  const auto V = out.vocab.size();
  std::int32_t user_index = 0;
  for (const auto& js : j.at("sequences")) {
    UserSequence s;
    s.user_index = user_index++;
    s.user = js.at("user").get<std::string>();
    s.items = js.at("items").get<std::vector<ItemId>>();
    s.train_end = js.at("train_end").get<std::int32_t>();
    s.valid_end = js.at("valid_end").get<std::int32_t>();
    s.synthetic = js.value("synthetic", false);
    for (ItemId it : s.items) {
      if (it <= kPadding || it > V) throw Error("corpus cache: item index out of range in user " + s.user);
    }
    if (s.train_end < 1 || s.train_end > s.valid_end || s.valid_end > s.length()) {
      throw Error("corpus cache: bad split marks for user " + s.user);
    }
    out.sequences.push_back(std::move(s));
  }
  out.dropped_count = j.value("dropped_count", std::size_t{0});
  out.item_freq = train_item_frequency(out.sequences, V);
  return out;
}

void save_corpus(const SplitCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << corpus_to_json(corpus).dump(1) << '\n';
}

SplitCorpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());
  return corpus_from_json(nlohmann::json::parse(in));
}

}  // namespace uda4sr
