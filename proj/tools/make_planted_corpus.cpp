// Writes the planted-interest toy corpus as a user/item/timestamp TSV.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "uda4sr/planted.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic corpus with planted interest clusters"};
  uda4sr::PlantedConfig cfg;
  std::string out_path;
  app.add_option("-o,--output", out_path, "Output TSV (stdout when omitted)");
  app.add_option("--users", cfg.users)->check(CLI::PositiveNumber);
  app.add_option("--items", cfg.items)->check(CLI::PositiveNumber);
  app.add_option("--clusters", cfg.clusters)->check(CLI::PositiveNumber);
  app.add_option("--clusters-per-user", cfg.clusters_per_user)->check(CLI::PositiveNumber);
  app.add_option("--length", cfg.length)->check(CLI::PositiveNumber);
  app.add_option("--stay", cfg.stay)->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", cfg.seed);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto corpus = uda4sr::make_planted_corpus(cfg);
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) {
        std::cerr << "cannot write " << out_path << '\n';
        return 3;
      }
    }
    std::ostream& out = out_path.empty() ? std::cout : file;
    out << "user_id\titem_id\ttimestamp\n";
    for (const auto& r : corpus.interactions) out << r.user << '\t' << r.item << '\t' << r.timestamp << '\n';
    return out ? 0 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
