// uda4sr <preprocess|build-graph|augment|train|evaluate|report> --config <file> [flags]

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "uda4sr/errors.hpp"
#include "uda4sr/pipeline.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kMissing = 2;
constexpr int kRuntime = 3;

int run(const std::string& command, uda4sr::RunConfig cfg, const uda4sr::CommandFlags& flags,
        const std::string& split_name) {
  using namespace uda4sr;
  apply_flags(cfg, flags);
  const Split split = split_from_string(split_name);
  if (command == "preprocess") {
    const auto stats = cmd_preprocess(cfg);
    std::cout << stats.dump() << '\n';
  } else if (command == "build-graph") {
    const ItemGraph g = cmd_build_graph(cfg);
    std::cout << "graph: V=" << g.num_items() << " edges=" << g.num_edges() << " n=" << g.order() << '\n';
  } else if (command == "augment") {
    const auto synthetic = cmd_augment(cfg);
    std::cout << "synthetic sequences: " << synthetic.size() << '\n';
  } else if (command == "train") {
    const TrainResult r = cmd_train(cfg);
    std::cout << "tag=" << run_tag(cfg) << " epochs=" << r.history.size() << " best_epoch=" << r.best_epoch;
    if (r.best_epoch > 0) std::cout << " val_ndcg10=" << r.history[static_cast<std::size_t>(r.best_epoch - 1)].val_ndcg10;
    std::cout << '\n';
  } else if (command == "evaluate") {
    const MetricReport rep = cmd_evaluate(cfg, split);
    std::cout << report_to_json(rep).dump() << '\n';
  } else {
    const auto reports = cmd_report(cfg, split);
    write_report_csv(reports, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential recommendation pipeline with graph-contrastive and GAN-augmented training"};
  std::string command;
  std::string config_path;
  std::string split = "test";
  uda4sr::CommandFlags flags;
  std::uint64_t seed = 0;
  std::string workdir;
  double epsilon = 0.0;
  int order = 0;

  app.add_option("command", command, "Pipeline stage")
      ->required()
      ->check(CLI::IsMember({"preprocess", "build-graph", "augment", "train", "evaluate", "report"}));
  app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Global seed");
  auto* workdir_opt = app.add_option("--workdir", workdir, "Work directory (default: $UDA4SR_WORKDIR)");
  app.add_flag("--no-gcl", flags.no_gcl, "Disable the graph contrastive loss");
  app.add_flag("--no-gan", flags.no_gan, "Train without synthetic sequences");
  app.add_flag("--augment-graph", flags.augment_graph, "Include synthetic sequences in the item graph");
  auto* eps_opt = app.add_option("--epsilon", epsilon, "Edge weight threshold");
  auto* order_opt = app.add_option("--order", order, "Graph window order n");
  app.add_option("--split", split, "Evaluation split")->check(CLI::IsMember({"valid", "test"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  if (*seed_opt) flags.seed = seed;
  if (*workdir_opt) flags.workdir = workdir;
  if (*eps_opt) flags.epsilon = epsilon;
  if (*order_opt) flags.order = order;

  try {
    uda4sr::RunConfig cfg;
    if (!config_path.empty()) {
      cfg = uda4sr::load_run_config(config_path);
    } else if (command != "report") {
      std::cerr << "error: --config is required for " << command << '\n';
      return kUsage;
    }
    return run(command, std::move(cfg), flags, split);
  } catch (const uda4sr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const uda4sr::MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return kMissing;
  } catch (const uda4sr::FileNotFound& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissing;
  } catch (const uda4sr::MalformedLine& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
