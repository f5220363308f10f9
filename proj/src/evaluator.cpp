#include "uda4sr/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "uda4sr/errors.hpp"

namespace uda4sr {

std::string to_string(Split s) { return s == Split::kValid ? "valid" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "valid" || s == "validation") return Split::kValid;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "' (expected valid or test)");
}

std::vector<EvalEvent> make_events(const SplitCorpus& corpus, Split split, int t_max) {
  std::vector<EvalEvent> events;
  for (const auto& s : corpus.sequences) {
    if (s.synthetic) continue;
    const std::int32_t begin = split == Split::kValid ? s.train_end : s.valid_end;
    const std::int32_t end = split == Split::kValid ? s.valid_end : s.length();
    for (std::int32_t p = begin; p < end; ++p) {
      EvalEvent e;
      const std::int32_t from = std::max(0, p - t_max);
      e.history.assign(s.items.begin() + from, s.items.begin() + p);
      e.target = s.items[static_cast<std::size_t>(p)];
      e.user_index = s.user_index;
      events.push_back(std::move(e));
    }
  }
  return events;
}

PopularityRanker::PopularityRanker(std::span<const std::int64_t> item_freq) {
  const auto n = static_cast<Eigen::Index>(item_freq.size());
  std::vector<ItemId> order;
  for (ItemId i = 1; i < n; ++i) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) { return item_freq[a] > item_freq[b]; });
  scores_ = Eigen::VectorXd::Zero(n);
  // Strictly decreasing scores along the sorted order, so no two items tie.
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    scores_(order[pos]) = static_cast<double>(order.size() - pos);
  }
}

Eigen::VectorXd PopularityRanker::scores(std::span<const ItemId>) const { return scores_; }

Eigen::VectorXd ModelRanker::scores(std::span<const ItemId> history) const {
  if (history.empty()) return Eigen::VectorXd::Zero(params_.item_embedding.value.rows());
  const InterestSet interests = extract_interests(history, params_, cfg_);
  return score_all(interests, params_.item_embedding.value);
}

int full_rank(const EvalEvent& event, const Eigen::VectorXd& scores) {
  const auto n = scores.size();
  if (event.target <= kPadding || event.target >= n) throw std::out_of_range("full_rank: target outside catalog");
  std::vector<char> excluded(static_cast<std::size_t>(n), 0);
  for (ItemId h : event.history) {
    if (h > kPadding && h < n) excluded[static_cast<std::size_t>(h)] = 1;
  }
  excluded[static_cast<std::size_t>(event.target)] = 0;
  const double target = scores(event.target);
  int rank = 1;
  for (Eigen::Index c = 1; c < n; ++c) {
    if (c == event.target || excluded[static_cast<std::size_t>(c)]) continue;
    if (scores(c) >= target) ++rank;
  }
  return rank;
}

double recall_at_k(std::span<const int> ranks, int k) {
  if (ranks.empty()) return 0.0;
  std::size_t hits = 0;
  for (int r : ranks) {
    if (r < 1) throw std::invalid_argument("ranks must be >= 1");
    if (r <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double ndcg_at_k(std::span<const int> ranks, int k) {
  if (ranks.empty()) return 0.0;
  double total = 0.0;
  for (int r : ranks) {
    if (r < 1) throw std::invalid_argument("ranks must be >= 1");
    if (r <= k) total += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  }
  return total / static_cast<double>(ranks.size());
}

bool MetricReport::check_invariants(std::string* why) const {
  auto fail = [why](std::string m) {
    if (why) *why = std::move(m);
    return false;
  };
  for (const auto* m : {&recall, &ndcg}) {
    double prev = -1.0;
    for (const auto& [k, v] : *m) {
      if (!(v >= 0.0 && v <= 1.0)) return fail("metric @" + std::to_string(k) + " outside [0,1]");
      if (v < prev) return fail("metric decreases at k=" + std::to_string(k));
      prev = v;
    }
  }
  return true;
}

MetricReport metrics_from_ranks(std::span<const int> ranks, const std::string& tag) {
  MetricReport r;
  r.config_tag = tag;
  r.n_events = ranks.size();
  for (int k : kCutoffs) {
    r.recall[k] = recall_at_k(ranks, k);
    r.ndcg[k] = ndcg_at_k(ranks, k);
  }
  return r;
}

std::vector<int> rank_events(const Ranker& ranker, std::span<const EvalEvent> events, int workers) {
  std::vector<int> ranks(events.size(), 0);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) ranks[i] = full_rank(events[i], ranker.scores(events[i].history));
  };
  workers = std::max(1, std::min<int>(workers, static_cast<int>(events.size())));
  if (workers == 1) {
    run(0, events.size());
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back(run, events.size() * static_cast<std::size_t>(w) / static_cast<std::size_t>(workers),
                           events.size() * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(workers));
    }
    for (auto& t : threads) t.join();
  }
  return ranks;
}

MetricReport evaluate(const Ranker& ranker, std::span<const EvalEvent> events, const std::string& tag, int workers) {
  const auto ranks = rank_events(ranker, events, workers);
  return metrics_from_ranks(ranks, tag);
}

nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json recall, ndcg;
  for (const auto& [k, v] : r.recall) recall[std::to_string(k)] = v;
  for (const auto& [k, v] : r.ndcg) ndcg[std::to_string(k)] = v;
  return {{"config_tag", r.config_tag}, {"n_events", r.n_events}, {"recall", recall}, {"ndcg", ndcg}};
}

MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.config_tag = j.at("config_tag").get<std::string>();
  r.n_events = j.value("n_events", std::size_t{0});
  for (const auto& [k, v] : j.at("recall").items()) r.recall[std::stoi(k)] = v.get<double>();
  for (const auto& [k, v] : j.at("ndcg").items()) r.ndcg[std::stoi(k)] = v.get<double>();
  return r;
}

void write_report_csv(std::span<const MetricReport> reports, std::ostream& out) {
  out << "config,R@10,N@10,R@20,N@20\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& r : reports) {
    out << r.config_tag << ',' << r.recall.at(10) << ',' << r.ndcg.at(10) << ',' << r.recall.at(20) << ','
        << r.ndcg.at(20) << '\n';
  }
}

std::vector<MetricReport> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "config,R@10,N@10,R@20,N@20") throw Error("report csv: bad header");
  std::vector<MetricReport> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw MalformedLine(line_no, "expected 5 columns");
    MetricReport r;
    r.config_tag = cells[0];
    r.recall[10] = std::stod(cells[1]);
    r.ndcg[10] = std::stod(cells[2]);
    r.recall[20] = std::stod(cells[3]);
    r.ndcg[20] = std::stod(cells[4]);
    out.push_back(std::move(r));
  }
  return out;
}

void report(std::span<const MetricReport> reports, const std::filesystem::path& csv_path) {
  if (reports.empty()) throw std::invalid_argument("report: no reports");
  {
    std::ofstream out(csv_path);
    if (!out) throw Error("cannot write " + csv_path.string());
    write_report_csv(reports, out);
    if (!out) throw Error("write failed: " + csv_path.string());
  }
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  std::ofstream out(json_path);
  if (!out) throw Error("cannot write " + json_path.string());
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  out << arr.dump(2) << '\n';
}

}  // namespace uda4sr
