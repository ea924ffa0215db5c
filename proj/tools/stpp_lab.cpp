// stpp_lab: simulate, estimate, envelope, plot, reproduce-paper.

#include "stpp/experiment.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<std::string> out;
  int jobs = 0;
};

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", c.config, "experiment JSON (or a run manifest)");
    cmd->add_option("--preset", c.preset, "poisson_paper | hardcore_paper | lgcp_paper");
  }
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--replicates", c.replicates, "number of replicates")->check(CLI::NonNegativeNumber);
  cmd->add_option("--jobs", c.jobs, "worker threads (default: STPP_LAB_JOBS or 1)")->check(CLI::NonNegativeNumber);
}

int resolve_jobs(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("STPP_LAB_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

stpp::ConfigOverrides overrides(const Common& c) {
  stpp::ConfigOverrides o;
  o.seed = c.seed;
  o.replicates = c.replicates;
  if (c.out) o.out = *c.out;
  return o;
}

stpp::ExperimentConfig resolve(const Common& c) {
  if (c.config.empty() == c.preset.empty())
    throw stpp::ConfigError("pass exactly one of --config or --preset");
  auto cfg = c.config.empty() ? stpp::preset_config(c.preset) : stpp::load_config(c.config);
  return stpp::with_overrides(std::move(cfg), overrides(c));
}

int report(const stpp::CommandResult& r) {
  for (const auto& v : r.verdicts) std::cout << v << '\n';
  std::cout << "config hash " << r.manifest.config_hash << ", " << r.manifest.outputs.size()
            << " output files\n";
  return r.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inhomogeneous space-time summary statistics lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", STPP_VERSION);

  Common sim_opts, est_opts, env_opts, rep_opts;
  auto* simulate = app.add_subcommand("simulate", "simulate model realisations to pattern CSVs");
  add_common(simulate, sim_opts);

  auto* estimate = app.add_subcommand("estimate", "estimate F, G, J, K for pattern CSVs");
  add_common(estimate, est_opts);
  std::vector<std::string> pattern_files;
  estimate->add_option("patterns", pattern_files, "pattern CSVs (default: <out>/patterns/pattern_*.csv)");

  auto* env = app.add_subcommand("envelope", "Monte Carlo envelope for one realisation");
  add_common(env, env_opts);

  auto* plot = app.add_subcommand("plot", "SVG slices from summary CSVs");
  std::vector<std::string> summaries;
  std::string plot_out = "plots";
  plot->add_option("summaries", summaries, "summary CSVs")->required();
  plot->add_option("--out", plot_out, "output directory");

  auto* reproduce = app.add_subcommand("reproduce-paper", "run the three presets end to end");
  add_common(reproduce, rep_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return report(stpp::cmd_simulate(resolve(sim_opts), resolve_jobs(sim_opts.jobs)));
    if (*estimate) {
      std::vector<std::filesystem::path> files(pattern_files.begin(), pattern_files.end());
      return report(stpp::cmd_estimate(resolve(est_opts), files, resolve_jobs(est_opts.jobs)));
    }
    if (*env) return report(stpp::cmd_envelope(resolve(env_opts), resolve_jobs(env_opts.jobs)));
    if (*plot) {
      std::vector<std::filesystem::path> files(summaries.begin(), summaries.end());
      for (const auto& p : stpp::cmd_plot(files, plot_out)) std::cout << p.generic_string() << '\n';
      return 0;
    }
    if (*reproduce) {
      const std::filesystem::path root = rep_opts.out.value_or("out/reproduce");
      auto o = overrides(rep_opts);
      o.out.reset();
      const auto r = stpp::cmd_reproduce_paper(root, o, resolve_jobs(rep_opts.jobs), std::cout);
      return r.ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
