#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dpvi/cli.hpp"
#include "dpvi/config.hpp"
#include "dpvi/types.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::vector<std::uint64_t> seeds;
  std::int64_t iterations = -1;
};

void attach_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "JSON run configuration file");
  sub->add_option("--output", args.output_dir, "output directory (overrides the config)");
  sub->add_option("--seeds", args.seeds, "seeds to run (overrides the config)");
  sub->add_option("--iters", args.iterations, "iteration count (overrides the config)");
}

dpvi::RunConfig make_config(const CommonArgs& args, const std::string& mode) {
  dpvi::RunConfig cfg;
  if (!args.config_path.empty()) cfg = dpvi::load_config(args.config_path);
  cfg.mode = mode;
  if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
  if (!args.seeds.empty()) cfg.seeds = args.seeds;
  if (args.iterations >= 0) cfg.iterations = args.iterations;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cloud-coordinated private constrained optimization simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  bool events = false;

  CLI::App* c_reference =
      app.add_subcommand("reference", "compute a high-accuracy reference solution");
  attach_common(c_reference, args);
  CLI::App* c_run = app.add_subcommand("run", "run the noisy iteration over the seed list");
  attach_common(c_run, args);
  CLI::App* c_simulate =
      app.add_subcommand("simulate", "run the message-level cloud simulation");
  attach_common(c_simulate, args);
  c_simulate->add_flag("--events", events, "write per-seed message event logs");
  CLI::App* c_analyze =
      app.add_subcommand("analyze", "evaluate the convergence and trade-off bounds");
  attach_common(c_analyze, args);
  CLI::App* c_check = app.add_subcommand("check", "fast numeric self-checks");
  attach_common(c_check, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (c_reference->parsed()) return dpvi::cmd_reference(make_config(args, "reference"));
    if (c_run->parsed()) return dpvi::cmd_run(make_config(args, "run"));
    if (c_simulate->parsed())
      return dpvi::cmd_simulate(make_config(args, "simulate"), events);
    if (c_analyze->parsed()) return dpvi::cmd_analyze(make_config(args, "analyze"));
    if (c_check->parsed()) return dpvi::cmd_check(make_config(args, "check"));
  } catch (const dpvi::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dpvi::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
