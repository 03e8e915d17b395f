// Batch front end: load a model configuration, run the requested
// computation, emit CSV tables and a plain-text report.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <loylab/runner.hpp>

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  double eta = 0.0;
  bool eta_set = false;
  std::int64_t grid = 0;
  bool grid_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> methods;
};

void attach_options(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "configuration file (JSON)")
      ->required();
  sub->add_option("--out", opts.out_dir, "output directory");
  sub->add_option("--eta", opts.eta, "resolvent regulator override")
      ->each([&opts](const std::string&) { opts.eta_set = true; });
  sub->add_option("--grid", opts.grid, "grid points per channel override")
      ->each([&opts](const std::string&) { opts.grid_set = true; });
  sub->add_option("--seed", opts.seed, "random seed override")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  sub->add_option("--method", opts.methods,
                  "method (repeatable): loy0 loy improved spectral iterate "
                  "onedim");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for effective Hamiltonians of unstable "
               "multi-level subsystems"};
  app.require_subcommand(1);

  CommonOpts opts;
  for (const char* name : {"heff", "evolve", "fl-estimate", "diagnose", "sweep"})
    attach_options(app.add_subcommand(name), opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  loylab::Overrides over;
  if (opts.eta_set) over.eta = opts.eta;
  if (opts.grid_set) over.grid_points = static_cast<Eigen::Index>(opts.grid);
  if (opts.seed_set) over.seed = opts.seed;
  if (!opts.out_dir.empty()) over.out_dir = opts.out_dir;
  over.methods = opts.methods;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const loylab::RunConfig cfg = loylab::load_config(opts.config_path, over);
    loylab::run_command(command, cfg);
  } catch (const loylab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure [" << command << "]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
