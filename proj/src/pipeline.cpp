#include "uda4sr/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "uda4sr/errors.hpp"
#include "uda4sr/rng.hpp"

namespace uda4sr {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

void RunConfig::validate() const {
  if (corpus.min_count < 1) throw ConfigError("corpus.min_count must be >= 1");
  graph.validate();
  gan.validate();
  model.validate();
  train.validate();
  contrast.validate();
}

namespace {

template <typename T>
T parse_value(const std::string& section, const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof()) {
    throw ConfigError("[" + section + "] " + key + ": cannot parse '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("[" + section + "] " + key + ": expected a boolean, got '" + text + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using SectionTable = std::map<std::string, Setter>;

template <typename T>
Setter field(const std::string& section, const std::string& key, T RunConfig::*group_ptr, auto member) {
  return [=](RunConfig& cfg, const std::string& text) {
    auto& target = cfg.*group_ptr.*member;
    using V = std::remove_reference_t<decltype(target)>;
    target = parse_value<V>(section, key, text);
  };
}

const std::map<std::string, SectionTable>& schema() {
  static const std::map<std::string, SectionTable> table = [] {
    std::map<std::string, SectionTable> t;
    t["corpus"]["min_count"] = field("corpus", "min_count", &RunConfig::corpus, &CorpusConfig::min_count);

    t["graph"]["order"] = field("graph", "order", &RunConfig::graph, &GraphConfig::order_n);
    t["graph"]["epsilon"] = field("graph", "epsilon", &RunConfig::graph, &GraphConfig::epsilon);
    t["graph"]["k_min"] = field("graph", "k_min", &RunConfig::graph, &GraphConfig::k_min);
    t["graph"]["k_max"] = field("graph", "k_max", &RunConfig::graph, &GraphConfig::k_max);
    t["graph"]["hops"] = field("graph", "hops", &RunConfig::graph, &GraphConfig::hops);
    t["graph"]["fanout"] = field("graph", "fanout", &RunConfig::graph, &GraphConfig::fanout);
    t["graph"]["augment"] = [](RunConfig& c, const std::string& v) {
      c.augment_graph = parse_bool("graph", "augment", v);
    };

    t["gan"]["prefix_frac"] = field("gan", "prefix_frac", &RunConfig::gan, &AugmentConfig::prefix_frac);
    t["gan"]["rho_aug"] = field("gan", "rho_aug", &RunConfig::gan, &AugmentConfig::rho_aug);
    t["gan"]["temp_start"] = field("gan", "temp_start", &RunConfig::gan, &AugmentConfig::temp_start);
    t["gan"]["temp_end"] = field("gan", "temp_end", &RunConfig::gan, &AugmentConfig::temp_end);
    t["gan"]["eta_div"] = field("gan", "eta_div", &RunConfig::gan, &AugmentConfig::eta_div);
    t["gan"]["mle_epochs"] = field("gan", "mle_epochs", &RunConfig::gan, &AugmentConfig::mle_epochs);
    t["gan"]["adv_steps"] = field("gan", "adv_steps", &RunConfig::gan, &AugmentConfig::adv_steps);
    t["gan"]["batch_size"] = field("gan", "batch_size", &RunConfig::gan, &AugmentConfig::batch_size);
    t["gan"]["lr"] = field("gan", "lr", &RunConfig::gan, &AugmentConfig::lr);
    t["gan"]["enabled"] = [](RunConfig& c, const std::string& v) { c.use_gan = parse_bool("gan", "enabled", v); };

    t["model"]["d"] = field("model", "d", &RunConfig::model, &ModelConfig::d);
    t["model"]["n_layers"] = field("model", "n_layers", &RunConfig::model, &ModelConfig::n_layers);
    t["model"]["n_heads"] = field("model", "n_heads", &RunConfig::model, &ModelConfig::n_heads);
    t["model"]["k_capsules"] = field("model", "k_capsules", &RunConfig::model, &ModelConfig::k_capsules);
    t["model"]["routing_iters"] = field("model", "routing_iters", &RunConfig::model, &ModelConfig::routing_iters);
    t["model"]["dropout"] = field("model", "dropout", &RunConfig::model, &ModelConfig::dropout);
    t["model"]["t_max"] = field("model", "t_max", &RunConfig::model, &ModelConfig::t_max);

    t["train"]["lr"] = field("train", "lr", &RunConfig::train, &TrainConfig::lr);
    t["train"]["batch_size"] = field("train", "batch_size", &RunConfig::train, &TrainConfig::batch_size);
    t["train"]["n_neg"] = field("train", "n_neg", &RunConfig::train, &TrainConfig::n_neg);
    t["train"]["mu_reg"] = field("train", "mu_reg", &RunConfig::train, &TrainConfig::mu_reg);
    t["train"]["max_epochs"] = field("train", "max_epochs", &RunConfig::train, &TrainConfig::max_epochs);
    t["train"]["patience"] = field("train", "patience", &RunConfig::train, &TrainConfig::patience);
    t["train"]["seed"] = field("train", "seed", &RunConfig::train, &TrainConfig::seed);
    t["train"]["eval_workers"] = field("train", "eval_workers", &RunConfig::train, &TrainConfig::eval_workers);

    t["contrast"]["tau"] = field("contrast", "tau", &RunConfig::contrast, &ContrastConfig::tau);
    t["contrast"]["lambda_cl"] = field("contrast", "lambda_cl", &RunConfig::contrast, &ContrastConfig::lambda_cl);

    t["paths"]["data"] = [](RunConfig& c, const std::string& v) { c.paths.data = v; };
    t["paths"]["workdir"] = [](RunConfig& c, const std::string& v) { c.paths.workdir = v; };
    return t;
  }();
  return table;
}

}  // namespace

RunConfig parse_run_config(std::istream& in, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig cfg;
  const auto& table = schema();
  for (const auto& [name, node] : tree) {
    const auto section = table.find(name);
    if (node.empty() && section == table.end()) {
      if (name != "seed") throw ConfigError("unknown top-level key '" + name + "'");
      cfg.train.seed = parse_value<std::uint64_t>("", "seed", node.data());
      continue;
    }
    if (section == table.end()) throw ConfigError("unknown config section [" + name + "]");
    for (const auto& [key, value] : node) {
      const auto setter = section->second.find(key);
      if (setter == section->second.end()) throw ConfigError("unknown key '" + key + "' in [" + name + "]");
      setter->second(cfg, value.data());
    }
  }
  for (fs::path* p : {&cfg.paths.data, &cfg.paths.workdir}) {
    if (!p->empty() && p->is_relative() && !base_dir.empty()) *p = base_dir / *p;
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());
  return parse_run_config(in, path.parent_path());
}

void apply_flags(RunConfig& cfg, const CommandFlags& flags) {
  if (flags.seed) cfg.train.seed = *flags.seed;
  if (flags.workdir) cfg.paths.workdir = *flags.workdir;
  if (flags.no_gcl) cfg.contrast.lambda_cl = 0.0;
  if (flags.no_gan) cfg.use_gan = false;
  if (flags.augment_graph) cfg.augment_graph = true;
  if (flags.epsilon) cfg.graph.epsilon = *flags.epsilon;
  if (flags.order) cfg.graph.order_n = *flags.order;
  if (cfg.paths.workdir.empty()) {
    if (const char* env = std::getenv("UDA4SR_WORKDIR"); env && *env) cfg.paths.workdir = env;
  }
  cfg.validate();
}

std::string run_tag(const RunConfig& cfg) {
  const bool gcl = cfg.contrast.lambda_cl > 0.0;
  if (gcl && cfg.use_gan) return "full";
  if (gcl) return "no_gan";
  if (cfg.use_gan) return "no_gcl";
  return "ablation_base";
}

std::uint64_t config_hash(const RunConfig& c) {
  std::ostringstream s;
  s << std::setprecision(17);
  s << "corpus.min_count=" << c.corpus.min_count << '\n'
    << "graph=" << c.graph.order_n << ',' << c.graph.epsilon << ',' << c.graph.k_min << ',' << c.graph.k_max << ','
    << c.graph.hops << ',' << c.graph.fanout << ',' << c.augment_graph << '\n'
    << "gan=" << c.gan.prefix_frac << ',' << c.gan.rho_aug << ',' << c.gan.temp_start << ',' << c.gan.temp_end << ','
    << c.gan.eta_div << ',' << c.gan.mle_epochs << ',' << c.gan.adv_steps << ',' << c.gan.batch_size << ','
    << c.gan.lr << ',' << c.use_gan << '\n'
    << "model=" << c.model.d << ',' << c.model.n_layers << ',' << c.model.n_heads << ',' << c.model.k_capsules << ','
    << c.model.routing_iters << ',' << c.model.dropout << ',' << c.model.t_max << '\n'
    << "train=" << c.train.lr << ',' << c.train.batch_size << ',' << c.train.n_neg << ',' << c.train.mu_reg << ','
    << c.train.max_epochs << ',' << c.train.patience << ',' << c.train.seed << '\n'
    << "contrast=" << c.contrast.tau << ',' << c.contrast.lambda_cl << '\n';
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

WorkdirLock::WorkdirLock(const fs::path& workdir) : path_(workdir / ".lock") {
  fs::create_directories(workdir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) throw Error("work directory is locked by another run: " + path_.string());
  std::fclose(f);
}

WorkdirLock::~WorkdirLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

constexpr char kMagic[8] = {'U', 'D', 'A', '4', 'S', 'R', 'C', 'K'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw Error("checkpoint truncated");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& in) {
  const auto n = take<std::uint64_t>(in);
  if (n > (1ULL << 32)) throw Error("checkpoint corrupt: string too long");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw Error("checkpoint truncated");
  return s;
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put(out, ckpt.format_version);
  put(out, ckpt.config_hash);
  put(out, ckpt.epoch);
  put<std::uint64_t>(out, ckpt.tensors.size());
  for (const auto& [name, m] : ckpt.tensors) {
    put_string(out, name);
    put<std::int64_t>(out, m.rows());
    put<std::int64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  put_string(out, ckpt.rng_state);
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + sizeof magic, kMagic)) throw Error("not a checkpoint file");
  Checkpoint c;
  c.format_version = take<std::uint32_t>(in);
  if (c.format_version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(c.format_version));
  }
  c.config_hash = take<std::uint64_t>(in);
  c.epoch = take<std::int32_t>(in);
  const auto count = take<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = take_string(in);
    const auto rows = take<std::int64_t>(in);
    const auto cols = take<std::int64_t>(in);
    if (rows < 0 || cols < 0 || rows * cols > (1LL << 31)) throw Error("checkpoint corrupt: bad shape for " + name);
    ad::Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw Error("checkpoint truncated");
    c.tensors.emplace_back(std::move(name), std::move(m));
  }
  c.rng_state = take_string(in);
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_checkpoint(ckpt, out);
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("checkpoint not found: " + path.string() + " (run `uda4sr train` first)");
  return read_checkpoint(in);
}

Checkpoint make_checkpoint(const ModelParams& model, const GnnParams& gnn, std::uint64_t hash, std::int32_t epoch,
                           std::string rng_state) {
  Checkpoint c;
  c.config_hash = hash;
  c.epoch = epoch;
  for (const ad::Param* p : model.params()) c.tensors.emplace_back(p->name, p->value);
  c.tensors.emplace_back("routing_logit_init", model.routing_logit_init);
  for (const ad::Param* p : gnn.params()) c.tensors.emplace_back(p->name, p->value);
  c.rng_state = std::move(rng_state);
  return c;
}

void restore_checkpoint(const Checkpoint& ckpt, ModelParams& model, GnnParams& gnn) {
  std::map<std::string, ad::Matrix*> slots;
  for (ad::Param* p : model.params()) slots[p->name] = &p->value;
  slots["routing_logit_init"] = &model.routing_logit_init;
  for (ad::Param* p : gnn.params()) slots[p->name] = &p->value;
  std::size_t filled = 0;
  for (const auto& [name, m] : ckpt.tensors) {
    const auto it = slots.find(name);
    if (it == slots.end()) throw DimensionMismatch("checkpoint has unknown tensor " + name);
    if (it->second->rows() != m.rows() || it->second->cols() != m.cols()) {
      throw DimensionMismatch("checkpoint tensor " + name + " has the wrong shape");
    }
    *it->second = m;
    ++filled;
  }
  if (filled != slots.size()) throw DimensionMismatch("checkpoint is missing tensors");
  model.zero_grad();
  gnn.zero_grad();
}

nlohmann::json corpus_stats(const SplitCorpus& corpus) {
  std::size_t events = 0;
  for (const auto& s : corpus.sequences) events += s.items.size();
  const double users = static_cast<double>(corpus.sequences.size());
  const double items = static_cast<double>(corpus.num_items());
  return {{"users", corpus.sequences.size()},
          {"items", corpus.num_items()},
          {"events", events},
          {"density", users * items > 0 ? static_cast<double>(events) / (users * items) : 0.0}};
}

nlohmann::json synthetic_to_json(const std::vector<SyntheticSequence>& synthetic, const SplitCorpus& corpus) {
  SplitCorpus rows;
  rows.vocab = corpus.vocab;
  rows.sequences = to_user_sequences(synthetic, corpus);
  nlohmann::json j = corpus_to_json(rows);
  for (std::size_t i = 0; i < synthetic.size(); ++i) j["sequences"][i]["origin_user"] = synthetic[i].origin_user;
  return j;
}

std::vector<SyntheticSequence> synthetic_from_json(const nlohmann::json& j, const SplitCorpus& corpus) {
  const SplitCorpus rows = corpus_from_json(j);
  if (!(rows.vocab == corpus.vocab)) throw MissingArtifact("synthetic cache is stale (vocab differs); rerun `uda4sr augment`");
  std::vector<SyntheticSequence> out;
  const auto& seqs = j.at("sequences");
  for (std::size_t i = 0; i < rows.sequences.size(); ++i) {
    SyntheticSequence s;
    s.items = rows.sequences[i].items;
    s.origin_user = seqs[i].at("origin_user").get<std::int32_t>();
    if (s.origin_user < 0 || static_cast<std::size_t>(s.origin_user) >= corpus.sequences.size()) {
      throw Error("synthetic cache: origin_user out of range");
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

Workdir workdir_of(const RunConfig& cfg) {
  if (cfg.paths.workdir.empty()) {
    throw ConfigError("no work directory: pass --workdir, set [paths] workdir, or export UDA4SR_WORKDIR");
  }
  return Workdir{cfg.paths.workdir};
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

nlohmann::json read_json(const fs::path& path, const std::string& hint) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.filename().string() + " not found in " + path.parent_path().string() + " (" + hint + ")");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("cannot parse " + path.string() + ": " + e.what());
  }
}

SplitCorpus require_corpus(const Workdir& w) {
  if (!fs::exists(w.corpus())) {
    throw MissingArtifact("corpus cache not found: " + w.corpus().string() + " (run `uda4sr preprocess` first)");
  }
  return load_corpus(w.corpus());
}

std::vector<UserSequence> load_synthetic_rows(const Workdir& w, const SplitCorpus& corpus) {
  const auto j = read_json(w.synthetic(), "run `uda4sr augment` first, or pass --no-gan");
  return to_user_sequences(synthetic_from_json(j, corpus), corpus);
}

TrainSettings settings_of(const RunConfig& cfg) { return {cfg.model, cfg.graph, cfg.contrast, cfg.train}; }

}  // namespace

nlohmann::json cmd_preprocess(const RunConfig& cfg) {
  const Workdir w = workdir_of(cfg);
  if (cfg.paths.data.empty()) throw ConfigError("no data file: set [paths] data");
  WorkdirLock lock(w.root);
  const auto raw = load_interactions(cfg.paths.data);
  const auto filtered = filter_min_support(raw, cfg.corpus.min_count);
  const SplitCorpus corpus = split_temporal(build_sequences(filtered, cfg.model.t_max));
  save_corpus(corpus, w.corpus());
  nlohmann::json stats = corpus_stats(corpus);
  write_json(stats, w.stats());
  return stats;
}

ItemGraph cmd_build_graph(const RunConfig& cfg) {
  const Workdir w = workdir_of(cfg);
  WorkdirLock lock(w.root);
  const SplitCorpus corpus = require_corpus(w);
  std::vector<UserSequence> extra;
  if (cfg.augment_graph && fs::exists(w.synthetic())) extra = load_synthetic_rows(w, corpus);
  ItemGraph graph = build_pruned_gig(corpus, cfg.graph, extra);
  save_graph(graph, w.graph());
  return graph;
}

std::vector<SyntheticSequence> cmd_augment(const RunConfig& cfg) {
  const Workdir w = workdir_of(cfg);
  WorkdirLock lock(w.root);
  const SplitCorpus corpus = require_corpus(w);
  const std::uint64_t seed = cfg.train.seed;
  // The generator reads the same initial embedding table the recommender starts from.
  const ad::Matrix embedding = ModelParams::init(corpus.num_items(), cfg.model, seed).item_embedding.value;
  GeneratorParams generator = GeneratorParams::init(corpus.num_items(), cfg.model.d, derive_seed(seed, Stream::kGan));
  DiscriminatorParams discriminator = DiscriminatorParams::init(cfg.model.d, derive_seed(seed, Stream::kGan));
  Rng gan_rng = make_rng(seed, Stream::kGan);
  const GanRunStats stats = train_gan(corpus, generator, discriminator, embedding, cfg.gan, gan_rng);
  Rng synth_rng = make_rng(seed, Stream::kSynthesize);
  auto synthetic = synthesize(corpus, generator, embedding, cfg.gan, synth_rng);

  nlohmann::json adversarial = nlohmann::json::array();
  for (const auto& a : stats.adversarial) {
    adversarial.push_back({{"loss_d", a.loss_d}, {"loss_g", a.loss_g}, {"diversity", a.diversity}});
  }
  nlohmann::json j = synthetic_to_json(synthetic, corpus);
  j["mle_curve"] = stats.mle_curve;
  j["adversarial"] = std::move(adversarial);
  write_json(j, w.synthetic());
  return synthetic;
}

TrainResult cmd_train(const RunConfig& cfg) {
  const Workdir w = workdir_of(cfg);
  WorkdirLock lock(w.root);
  const SplitCorpus corpus = require_corpus(w);
  if (!fs::exists(w.graph())) {
    throw MissingArtifact("graph cache not found: " + w.graph().string() + " (run `uda4sr build-graph` first)");
  }
  const ItemGraph graph = load_graph(w.graph());
  if (graph.num_items() != corpus.num_items()) {
    throw MissingArtifact("graph cache is stale (V differs from the corpus); rerun `uda4sr build-graph`");
  }
  std::vector<UserSequence> synthetic;
  if (cfg.use_gan) synthetic = load_synthetic_rows(w, corpus);

  TrainResult result = train(corpus, graph, synthetic, settings_of(cfg));
  const std::string tag = run_tag(cfg);
  std::ostringstream rng_state;
  rng_state << make_rng(cfg.train.seed, Stream::kTrainShuffle);
  save_checkpoint(make_checkpoint(result.model, result.gnn, config_hash(cfg), result.best_epoch, rng_state.str()),
                  w.checkpoint(tag));
  write_json(history_to_json(result.history), w.history(tag));
  return result;
}

MetricReport cmd_evaluate(const RunConfig& cfg, Split split) {
  const Workdir w = workdir_of(cfg);
  WorkdirLock lock(w.root);
  const SplitCorpus corpus = require_corpus(w);
  const std::string tag = run_tag(cfg);
  const Checkpoint ckpt = load_checkpoint(w.checkpoint(tag));
  if (ckpt.config_hash != config_hash(cfg)) {
    throw ConfigError("checkpoint " + w.checkpoint(tag).string() +
                      " was trained with a different configuration; pass the same config and flags as `train`");
  }
  ModelParams model = ModelParams::init(corpus.num_items(), cfg.model, cfg.train.seed);
  GnnParams gnn = GnnParams::init(cfg.model.d, cfg.train.seed);
  restore_checkpoint(ckpt, model, gnn);

  const auto events = make_events(corpus, split, cfg.model.t_max);
  const MetricReport rep = evaluate(ModelRanker(model, cfg.model), events, tag, cfg.train.eval_workers);
  write_json(report_to_json(rep), w.report(tag, split));
  const MetricReport pop = evaluate(PopularityRanker(corpus.item_freq), events, "popularity", cfg.train.eval_workers);
  write_json(report_to_json(pop), w.report("popularity", split));
  return rep;
}

std::vector<MetricReport> cmd_report(const RunConfig& cfg, Split split) {
  const Workdir w = workdir_of(cfg);
  WorkdirLock lock(w.root);
  const fs::path dir = w.root / "reports";
  const std::string suffix = "_" + to_string(split) + ".json";
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
        files.push_back(e.path());
      }
    }
  }
  if (files.empty()) {
    throw MissingArtifact("no " + to_string(split) + " reports in " + dir.string() + " (run `uda4sr evaluate` first)");
  }
  std::sort(files.begin(), files.end());
  std::vector<MetricReport> reports;
  for (const auto& f : files) reports.push_back(report_from_json(read_json(f, "corrupt report")));
  report(reports, w.report_csv());
  return reports;
}

}  // namespace uda4sr
