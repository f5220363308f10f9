#pragma once

// Pipeline stages behind the command-line tool. Each stage reads its inputs
// from a work directory and writes its artifacts back into it:
//   corpus.json, stats.json -> graph.gig -> synthetic.json
//   -> checkpoints/<tag>.ckpt, history/<tag>.json -> reports/<tag>_<split>.json -> report.csv

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "uda4sr/corpus.hpp"
#include "uda4sr/evaluator.hpp"
#include "uda4sr/gan_augment.hpp"
#include "uda4sr/gcl.hpp"
#include "uda4sr/gig.hpp"
#include "uda4sr/interest.hpp"
#include "uda4sr/trainer.hpp"

namespace uda4sr {

struct CorpusConfig {
  int min_count = 15;
};

struct PathsConfig {
  std::filesystem::path data;
  std::filesystem::path workdir;
};

struct RunConfig {
  CorpusConfig corpus;
  GraphConfig graph;
  AugmentConfig gan;
  ModelConfig model;
  TrainConfig train;  // train.seed is the global seed
  ContrastConfig contrast;
  PathsConfig paths;
  bool use_gan = true;
  bool augment_graph = false;

  void validate() const;
};

// Command-line overrides applied on top of the config file.
struct CommandFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> workdir;
  bool no_gcl = false;
  bool no_gan = false;
  bool augment_graph = false;
  std::optional<double> epsilon;
  std::optional<int> order;
};

// INI sections [corpus] [graph] [gan] [model] [train] [contrast] [paths];
// `seed` may also appear before the first section. Unknown sections or keys
// throw ConfigError. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Applies flags, fills the workdir from UDA4SR_WORKDIR when still unset, and validates.
void apply_flags(RunConfig& cfg, const CommandFlags& flags);

// full, no_gcl, no_gan or ablation_base.
std::string run_tag(const RunConfig& cfg);

// FNV-1a over every semantic field (paths excluded).
std::uint64_t config_hash(const RunConfig& cfg);

// Exclusive lock on a work directory for the lifetime of the object.
class WorkdirLock {
 public:
  explicit WorkdirLock(const std::filesystem::path& workdir);
  ~WorkdirLock();
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct Workdir {
  std::filesystem::path root;

  std::filesystem::path corpus() const { return root / "corpus.json"; }
  std::filesystem::path stats() const { return root / "stats.json"; }
  std::filesystem::path graph() const { return root / "graph.gig"; }
  std::filesystem::path synthetic() const { return root / "synthetic.json"; }
  std::filesystem::path checkpoint(const std::string& tag) const { return root / "checkpoints" / (tag + ".ckpt"); }
  std::filesystem::path history(const std::string& tag) const { return root / "history" / (tag + ".json"); }
  std::filesystem::path report(const std::string& tag, Split split) const {
    return root / "reports" / (tag + "_" + to_string(split) + ".json");
  }
  std::filesystem::path report_csv() const { return root / "report.csv"; }
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::int32_t epoch = 0;
  std::vector<std::pair<std::string, ad::Matrix>> tensors;
  std::string rng_state;
};

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const ModelParams& model, const GnnParams& gnn, std::uint64_t hash, std::int32_t epoch,
                           std::string rng_state);
// Overwrites every tensor of `model` and `gnn` (which must already have the right shapes).
void restore_checkpoint(const Checkpoint& ckpt, ModelParams& model, GnnParams& gnn);

// Corpus summary: users, items, events, density.
nlohmann::json corpus_stats(const SplitCorpus& corpus);

// Synthetic cache: the corpus-cache shape with `synthetic: true` and `origin_user` per sequence.
nlohmann::json synthetic_to_json(const std::vector<SyntheticSequence>& synthetic, const SplitCorpus& corpus);
std::vector<SyntheticSequence> synthetic_from_json(const nlohmann::json& j, const SplitCorpus& corpus);

nlohmann::json cmd_preprocess(const RunConfig& cfg);
ItemGraph cmd_build_graph(const RunConfig& cfg);
std::vector<SyntheticSequence> cmd_augment(const RunConfig& cfg);
TrainResult cmd_train(const RunConfig& cfg);
// Writes the model report for the run tag and a popularity baseline report.
MetricReport cmd_evaluate(const RunConfig& cfg, Split split);
// Aggregates every report of `split` in the workdir, sorted by tag.
std::vector<MetricReport> cmd_report(const RunConfig& cfg, Split split);

}  // namespace uda4sr
