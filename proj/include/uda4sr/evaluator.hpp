#pragma once

// Full-ranking evaluation: every catalog item except the user's history is a
// candidate; ties count against the target.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "uda4sr/corpus.hpp"
#include "uda4sr/interest.hpp"

namespace uda4sr {

enum class Split { kValid, kTest };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct EvalEvent {
  std::vector<ItemId> history;
  ItemId target = 0;
  std::int32_t user_index = 0;
};

// One event per item of the chosen region; history is every earlier item,
// truncated to the most recent t_max.
std::vector<EvalEvent> make_events(const SplitCorpus& corpus, Split split, int t_max);

class Ranker {
 public:
  virtual ~Ranker() = default;
  // One score per item id (size V + 1, entry 0 ignored). Higher ranks first.
  virtual Eigen::VectorXd scores(std::span<const ItemId> history) const = 0;
};

// Orders items by training-region frequency, ties by smaller index.
class PopularityRanker final : public Ranker {
 public:
  explicit PopularityRanker(std::span<const std::int64_t> item_freq);
  Eigen::VectorXd scores(std::span<const ItemId> history) const override;

 private:
  Eigen::VectorXd scores_;
};

class ModelRanker final : public Ranker {
 public:
  // Reads `params` only; safe to share across evaluation threads.
  ModelRanker(ModelParams& params, const ModelConfig& cfg) : params_(params), cfg_(cfg) {}
  Eigen::VectorXd scores(std::span<const ItemId> history) const override;

 private:
  ModelParams& params_;
  ModelConfig cfg_;
};

// 1 + number of non-history candidates scoring >= the target.
int full_rank(const EvalEvent& event, const Eigen::VectorXd& scores);

double recall_at_k(std::span<const int> ranks, int k);
double ndcg_at_k(std::span<const int> ranks, int k);

struct MetricReport {
  std::map<int, double> recall;
  std::map<int, double> ndcg;
  std::size_t n_events = 0;
  std::string config_tag;

  // Values in [0, 1] and non-decreasing in k.
  bool check_invariants(std::string* why = nullptr) const;
};

inline constexpr std::array<int, 2> kCutoffs{10, 20};

MetricReport metrics_from_ranks(std::span<const int> ranks, const std::string& tag);

std::vector<int> rank_events(const Ranker& ranker, std::span<const EvalEvent> events, int workers = 1);

MetricReport evaluate(const Ranker& ranker, std::span<const EvalEvent> events, const std::string& tag,
                      int workers = 1);

nlohmann::json report_to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);

// CSV: `config,R@10,N@10,R@20,N@20`, values with 4 decimals.
void write_report_csv(std::span<const MetricReport> reports, std::ostream& out);
std::vector<MetricReport> read_report_csv(std::istream& in);

// Writes `<path>` as CSV and `<path>.json` (extension replaced) as JSON.
void report(std::span<const MetricReport> reports, const std::filesystem::path& csv_path);

}  // namespace uda4sr
