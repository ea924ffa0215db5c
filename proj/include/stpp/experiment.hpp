#pragma once

// Experiment runner: JSON configs, presets, and the simulate / estimate /
// envelope / plot / reproduce-paper commands.

#include "stpp/covariance.hpp"
#include "stpp/intensity.hpp"
#include "stpp/simulators.hpp"
#include "stpp/summaries.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stpp {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { poisson, thinned_hardcore, lgcp };

struct ModelConfig {
  ModelKind kind = ModelKind::poisson;
  /// Poisson intensity, LGCP target intensity, or hard-core retention p.
  std::optional<IntensityField> intensity;
  HardCoreSpec hardcore;
  std::optional<CovarianceModel> covariance;
  std::vector<int> grid_spatial;  // LGCP field grid
  int grid_time = 32;
};

struct EnvelopeConfig {
  int n_sim = 39;
  double alpha = 0.05;
  Statistic statistic = Statistic::J;
  /// "poisson": inhomogeneous Poisson with the estimation intensity of the
  /// observed pattern. "model": the data model itself.
  std::string null_model = "poisson";
};

struct ExperimentConfig {
  std::string name;
  Window window = Window::unit(2);
  ModelConfig model;
  RangeGrid rt_grid = RangeGrid::regular(0.005, 20, 0.005, 20);
  std::vector<int> probes;  // per spatial axis then time
  int replicates = 1;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  EnvelopeConfig envelope;
  /// Fully resolved configuration, canonical JSON (hash input).
  std::string canonical;
};

/// Parses an experiment config or a run manifest (its embedded config).
/// Unknown keys are rejected; messages carry the JSON key path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// "poisson_paper", "hardcore_paper" or "lgcp_paper".
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<std::filesystem::path> out;
};

/// Applies overrides and refreshes the canonical form.
ExperimentConfig with_overrides(ExperimentConfig cfg, const ConfigOverrides& o);

/// FNV-1a 64-bit hash of the canonical config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// One model realisation; `unthinned` is set for the hard-core model.
struct Replicate {
  PointPattern pattern;
  std::optional<PointPattern> unthinned;
};

/// Model sampler with cached factorizations; simulate() is const and
/// thread-safe.
class ModelSimulator {
public:
  ModelSimulator(const ModelConfig& model, const Window& w);

  Replicate simulate(std::uint64_t seed) const;

  /// Intensity handed to the estimators for a realisation of this model.
  /// Thinned hard core: lambda_hat p with lambda_hat = n / int_W p.
  IntensityField estimation_intensity(const PointPattern& p) const;

  ModelKind kind() const { return model_.kind; }

private:
  ModelConfig model_;
  Window window_;
  std::optional<LgcpSampler> lgcp_;
  std::optional<RetentionFunction> retention_;
};

TestGrid probe_grid(const ExperimentConfig& cfg);

/// Pools replicates as one observation: 1 - G and 1 - F are averaged over all
/// centers and probes (weights n_centers, n_probes), J is their ratio, K is
/// the replicate mean and counts are summed.
SummaryEstimate pool_estimates(std::span<const SummaryEstimate> estimates);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> replicate_seeds;
  std::string version;
  double wall_time_seconds = 0.0;
  std::vector<std::string> outputs;
  bool complete = false;
};

void write_manifest(const RunManifest& m, const ExperimentConfig& cfg,
                    const std::filesystem::path& path);

struct CommandResult {
  RunManifest manifest;
  std::vector<std::string> verdicts;  // human-readable lines
  bool ok = true;
};

/// Writes `<out>/patterns/pattern_NNN.csv` (and `unthinned_NNN.csv` for the
/// hard core) plus `<out>/manifest_simulate.json`.
CommandResult cmd_simulate(const ExperimentConfig& cfg, int jobs);

/// Estimates every pattern file (default: `<out>/patterns/pattern_*.csv`),
/// writing `<out>/summaries/summary_NNN.csv` and `<out>/summary_pooled.csv`.
CommandResult cmd_estimate(const ExperimentConfig& cfg,
                           const std::vector<std::filesystem::path>& patterns, int jobs);

/// Observed realisation against n_sim null simulations; writes
/// `<out>/envelope_<stat>.csv` and one verdict line.
CommandResult cmd_envelope(const ExperimentConfig& cfg, int jobs);

/// SVG slices for each summary CSV, written next to `out_dir`.
std::vector<std::filesystem::path> cmd_plot(const std::vector<std::filesystem::path>& summaries,
                                            const std::filesystem::path& out_dir);

/// Runs the three presets end to end under `out_root/<preset>` and checks
/// their qualitative signatures.
CommandResult cmd_reproduce_paper(const std::filesystem::path& out_root, const ConfigOverrides& o,
                                  int jobs, std::ostream& log);

}  // namespace stpp
