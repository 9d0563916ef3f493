#include <exception>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mflqr/cli.hpp"

namespace {

using Command = std::function<int(const mflqr::cli::Options&, std::ostream&)>;

}  // namespace

int main(int argc, char** argv) {
  using namespace mflqr::cli;
  CLI::App app{"Model-free continuous-time LQR synthesis from sampled input/output data"};
  app.require_subcommand(1);

  Options opts;
  std::string config;
  std::uint64_t seed = 0;
  std::string out = "out";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Noise seed (overrides [run] seed)");
    sub->add_option("--out", out, "Output directory")->capture_default_str();
    sub->add_flag("--force", opts.force, "Accept inputs whose config hash differs from the current config");
  };

  std::vector<std::pair<CLI::App*, Command>> commands;
  auto add = [&](const std::string& name, const std::string& help, Command run) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub);
    commands.emplace_back(sub, std::move(run));
    return sub;
  };

  add("generate", "Simulate the configured plant and write dataset.csv", cmd_generate);
  add("synthesize", "Solve for the model-free gain from a dataset", cmd_synthesize)
      ->add_option("--data", opts.data, "Dataset CSV (default <out>/dataset.csv)");
  add("baseline", "Write the ARE gain of the known model", cmd_baseline);
  auto* compare = add("compare", "Compare a synthesized gain with the baseline in closed loop", cmd_compare);
  compare->add_option("--result", opts.result, "Synthesis result (default <out>/result.txt)");
  compare->add_option("--baseline", opts.baseline, "Baseline gain (default <out>/baseline.txt)");
  add("verify-lemmas", "Check the Q-function identities on the known model", cmd_verify_lemmas)
      ->add_option("--corrupt-p", opts.corrupt_p, "Debug: add this multiple of I to P before checking");
  add("repro-747", "747 lateral experiment end to end", cmd_repro_747);
  add("repro-quad", "Quadcopter attitude experiment end to end", cmd_repro_quad);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kParse;
  }

  if (!config.empty()) opts.config = config;
  opts.out = out;
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) opts.seed = seed;
  }

  try {
    for (const auto& [sub, run] : commands) {
      if (sub->parsed()) return run(opts, std::cout);
    }
  } catch (const mflqr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnexpected;
  }
  return kUnexpected;
}
