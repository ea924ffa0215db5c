#include "stpp/experiment.hpp"

#include "stpp/io.hpp"
#include "stpp/parallel.hpp"
#include "stpp/plot.hpp"
#include "stpp/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace stpp {

namespace {

using nlohmann::json;

constexpr std::uint64_t kEnvelopeStream = std::uint64_t{1} << 40;

// ---------------------------------------------------------------------------
// Checked JSON access with key paths in every message.

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  require_object(j, path);
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError(path + ": unknown key '" + key + "'");
  }
}

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

template <typename T>
T as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": wrong type (" + std::string(e.what()) + ")");
  }
}

template <typename T>
T get_or(const json& j, const std::string& path, const char* key, T fallback) {
  return j.contains(key) ? as<T>(j.at(key), child(path, key)) : fallback;
}

const json& need(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(child(path, key) + ": required key missing");
  return j.at(key);
}

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> list(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// ---------------------------------------------------------------------------
// Blocks.

Window parse_window(const json& j, const std::string& path) {
  check_keys(j, path, {"lo", "hi", "t"});
  const auto lo = as<std::vector<double>>(need(j, path, "lo"), child(path, "lo"));
  const auto hi = as<std::vector<double>>(need(j, path, "hi"), child(path, "hi"));
  const auto t = as<std::vector<double>>(need(j, path, "t"), child(path, "t"));
  if (t.size() != 2) throw ConfigError(child(path, "t") + ": expected [t_lo, t_hi]");
  try {
    return Window(vec(lo), vec(hi), t[0], t[1]);
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json window_json(const Window& w) {
  return {{"lo", list(w.lo())}, {"hi", list(w.hi())}, {"t", {w.t_lo(), w.t_hi()}}};
}

IntensityField parse_intensity(const json& j, const std::string& path, Eigen::Index d) {
  require_object(j, path);
  const auto kind = as<std::string>(need(j, path, "kind"), child(path, "kind"));
  try {
    if (kind == "constant") {
      check_keys(j, path, {"kind", "value"});
      return IntensityField::constant(as<double>(need(j, path, "value"), child(path, "value")));
    }
    if (kind == "log_linear") {
      check_keys(j, path, {"kind", "A", "b", "c"});
      const auto b = as<std::vector<double>>(need(j, path, "b"), child(path, "b"));
      if (static_cast<Eigen::Index>(b.size()) != d)
        throw ConfigError(child(path, "b") + ": needs one slope per spatial axis");
      return IntensityField::log_linear(as<double>(need(j, path, "A"), child(path, "A")), vec(b),
                                        as<double>(need(j, path, "c"), child(path, "c")));
    }
  } catch (const InvalidIntensity& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(child(path, "kind") + ": unknown intensity kind '" + kind +
                    "' (expected constant or log_linear)");
}

json intensity_json(const IntensityField& f) {
  if (f.kind() == IntensityKind::constant) return {{"kind", "constant"}, {"value", f.amplitude()}};
  return {{"kind", "log_linear"}, {"A", f.amplitude()}, {"b", list(f.slope())}, {"c", f.time_slope()}};
}

PowerExponential parse_component(const json& j, const std::string& path) {
  check_keys(j, path, {"var", "delta"});
  return {as<double>(need(j, path, "var"), child(path, "var")),
          as<double>(need(j, path, "delta"), child(path, "delta"))};
}

CovarianceModel parse_covariance(const json& j, const std::string& path) {
  require_object(j, path);
  const auto kind = as<std::string>(need(j, path, "kind"), child(path, "kind"));
  try {
    if (kind == "power_exponential_sup") {
      check_keys(j, path, {"kind", "var", "delta"});
      return CovarianceModel::power_exponential_sup(as<double>(need(j, path, "var"), child(path, "var")),
                                                    as<double>(need(j, path, "delta"), child(path, "delta")));
    }
    if (kind == "separable_mult" || kind == "separable_add") {
      check_keys(j, path, {"kind", "spatial", "temporal"});
      const auto s = parse_component(need(j, path, "spatial"), child(path, "spatial"));
      const auto t = parse_component(need(j, path, "temporal"), child(path, "temporal"));
      return kind == "separable_mult" ? CovarianceModel::separable_mult(s, t)
                                      : CovarianceModel::separable_add(s, t);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(child(path, "kind") + ": unknown covariance kind '" + kind + "'");
}

json covariance_json(const CovarianceModel& c) {
  auto comp = [](const PowerExponential& p) { return json{{"var", p.variance}, {"delta", p.exponent}}; };
  switch (c.kind()) {
    case CovarianceKind::power_exponential_sup:
      return {{"kind", "power_exponential_sup"}, {"var", c.spatial().variance}, {"delta", c.spatial().exponent}};
    case CovarianceKind::separable_mult:
      return {{"kind", "separable_mult"}, {"spatial", comp(c.spatial())}, {"temporal", comp(c.temporal())}};
    case CovarianceKind::separable_add:
      return {{"kind", "separable_add"}, {"spatial", comp(c.spatial())}, {"temporal", comp(c.temporal())}};
  }
  return {};
}

ModelConfig parse_model(const json& j, const std::string& path, Eigen::Index d) {
  require_object(j, path);
  const auto kind = as<std::string>(need(j, path, "kind"), child(path, "kind"));
  ModelConfig m;
  if (kind == "poisson") {
    check_keys(j, path, {"kind", "intensity"});
    m.kind = ModelKind::poisson;
    m.intensity = parse_intensity(need(j, path, "intensity"), child(path, "intensity"), d);
  } else if (kind == "thinned_hardcore") {
    check_keys(j, path, {"kind", "beta", "spatial_radius", "temporal_radius", "mcmc_steps", "torus", "retention"});
    m.kind = ModelKind::thinned_hardcore;
    m.hardcore.beta = get_or(j, path, "beta", m.hardcore.beta);
    m.hardcore.spatial_radius = get_or(j, path, "spatial_radius", m.hardcore.spatial_radius);
    m.hardcore.temporal_radius = get_or(j, path, "temporal_radius", m.hardcore.temporal_radius);
    m.hardcore.mcmc_steps = get_or(j, path, "mcmc_steps", m.hardcore.mcmc_steps);
    m.hardcore.torus = get_or(j, path, "torus", m.hardcore.torus);
    try {
      m.hardcore.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ": " + e.what());
    }
    m.intensity = parse_intensity(need(j, path, "retention"), child(path, "retention"), d);
  } else if (kind == "lgcp") {
    check_keys(j, path, {"kind", "intensity", "covariance", "grid"});
    m.kind = ModelKind::lgcp;
    m.intensity = parse_intensity(need(j, path, "intensity"), child(path, "intensity"), d);
    m.covariance = parse_covariance(need(j, path, "covariance"), child(path, "covariance"));
    const auto report = validate_continuity(*m.covariance);
    if (!report.ok) {
      std::string msg = child(path, "covariance") + ": fails the continuity check";
      for (const auto& line : report.diagnostics) msg += "; " + line;
      throw ConfigError(msg);
    }
    m.grid_spatial.assign(static_cast<std::size_t>(d), 32);
    if (j.contains("grid")) {
      const std::string gp = child(path, "grid");
      const auto& g = j.at("grid");
      check_keys(g, gp, {"spatial", "time"});
      m.grid_spatial = get_or(g, gp, "spatial", m.grid_spatial);
      m.grid_time = get_or(g, gp, "time", m.grid_time);
      if (static_cast<Eigen::Index>(m.grid_spatial.size()) != d)
        throw ConfigError(child(gp, "spatial") + ": needs one count per spatial axis");
      for (int c : m.grid_spatial)
        if (c < 1) throw ConfigError(child(gp, "spatial") + ": counts must be >= 1");
      if (m.grid_time < 1) throw ConfigError(child(gp, "time") + ": must be >= 1");
    }
  } else {
    throw ConfigError(child(path, "kind") + ": unknown model '" + kind +
                      "' (expected poisson, thinned_hardcore or lgcp)");
  }
  return m;
}

json model_json(const ModelConfig& m) {
  switch (m.kind) {
    case ModelKind::poisson:
      return {{"kind", "poisson"}, {"intensity", intensity_json(*m.intensity)}};
    case ModelKind::thinned_hardcore:
      return {{"kind", "thinned_hardcore"},
              {"beta", m.hardcore.beta},
              {"spatial_radius", m.hardcore.spatial_radius},
              {"temporal_radius", m.hardcore.temporal_radius},
              {"mcmc_steps", m.hardcore.mcmc_steps},
              {"torus", m.hardcore.torus},
              {"retention", intensity_json(*m.intensity)}};
    case ModelKind::lgcp:
      return {{"kind", "lgcp"},
              {"intensity", intensity_json(*m.intensity)},
              {"covariance", covariance_json(*m.covariance)},
              {"grid", {{"spatial", m.grid_spatial}, {"time", m.grid_time}}}};
  }
  return {};
}

RangeGrid parse_rt_grid(const json& j, const std::string& path) {
  require_object(j, path);
  try {
    if (j.contains("r") || j.contains("t")) {
      check_keys(j, path, {"r", "t"});
      return RangeGrid(as<std::vector<double>>(need(j, path, "r"), child(path, "r")),
                       as<std::vector<double>>(need(j, path, "t"), child(path, "t")));
    }
    check_keys(j, path, {"r_step", "r_count", "t_step", "t_count"});
    return RangeGrid::regular(as<double>(need(j, path, "r_step"), child(path, "r_step")),
                              as<int>(need(j, path, "r_count"), child(path, "r_count")),
                              as<double>(need(j, path, "t_step"), child(path, "t_step")),
                              as<int>(need(j, path, "t_count"), child(path, "t_count")));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  return {{"name", c.name},
          {"window", window_json(c.window)},
          {"model", model_json(c.model)},
          {"rt_grid", {{"r", c.rt_grid.r}, {"t", c.rt_grid.t}}},
          {"probes", c.probes},
          {"replicates", c.replicates},
          {"seed", c.seed},
          {"out", c.out.generic_string()},
          {"envelope",
           {{"n_sim", c.envelope.n_sim},
            {"alpha", c.envelope.alpha},
            {"statistic", to_string(c.envelope.statistic)},
            {"null", c.envelope.null_model}}}};
}

ExperimentConfig from_json(const json& root) {
  check_keys(root, "config", {"name", "window", "model", "rt_grid", "probes", "replicates", "seed", "out", "envelope"});
  ExperimentConfig c;
  c.name = get_or<std::string>(root, "", "name", "experiment");
  if (root.contains("window")) c.window = parse_window(root.at("window"), "window");
  const auto d = c.window.dim();
  c.model = parse_model(need(root, "", "model"), "model", d);
  if (root.contains("rt_grid")) c.rt_grid = parse_rt_grid(root.at("rt_grid"), "rt_grid");
  if (!erosion_nonempty(c.window, c.rt_grid.r.back(), c.rt_grid.t.back()))
    throw ConfigError("rt_grid: largest (r, t) leaves an empty eroded window");
  c.probes = get_or(root, "", "probes", std::vector<int>(static_cast<std::size_t>(d) + 1, 20));
  if (static_cast<Eigen::Index>(c.probes.size()) != d + 1)
    throw ConfigError("probes: needs one count per spatial axis plus time");
  for (int n : c.probes)
    if (n < 1) throw ConfigError("probes: counts must be >= 1");
  c.replicates = get_or(root, "", "replicates", 1);
  if (c.replicates < 0) throw ConfigError("replicates: must be >= 0");
  c.seed = get_or<std::uint64_t>(root, "", "seed", 1);
  c.out = get_or<std::string>(root, "", "out", "out");
  if (root.contains("envelope")) {
    const auto& e = root.at("envelope");
    check_keys(e, "envelope", {"n_sim", "alpha", "statistic", "null"});
    c.envelope.n_sim = get_or(e, "envelope", "n_sim", c.envelope.n_sim);
    c.envelope.alpha = get_or(e, "envelope", "alpha", c.envelope.alpha);
    const auto stat = get_or<std::string>(e, "envelope", "statistic", "J");
    try {
      c.envelope.statistic = parse_statistic(stat);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string("envelope.statistic: ") + ex.what());
    }
    c.envelope.null_model = get_or<std::string>(e, "envelope", "null", "poisson");
  }
  if (c.envelope.n_sim < 20) throw ConfigError("envelope.n_sim: must be >= 20");
  if (!(c.envelope.alpha > 0 && c.envelope.alpha < 1)) throw ConfigError("envelope.alpha: must lie in (0, 1)");
  if (c.envelope.null_model != "poisson" && c.envelope.null_model != "model")
    throw ConfigError("envelope.null: expected 'poisson' or 'model'");
  c.canonical = to_json(c).dump();
  return c;
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

std::string pad(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

RunManifest start_manifest(const std::string& command, const ExperimentConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.config_hash = config_hash(cfg);
  m.master_seed = cfg.seed;
  m.version = STPP_VERSION;
  for (int i = 0; i < cfg.replicates; ++i)
    m.replicate_seeds.push_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const std::string& json_text) {
  const json j = parse_text(json_text);
  if (j.is_object() && j.contains("config_hash")) {
    if (!j.contains("config")) throw ConfigError("manifest: missing embedded config");
    return from_json(j.at("config"));
  }
  return from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> preset_names() { return {"poisson_paper", "hardcore_paper", "lgcp_paper"}; }

ExperimentConfig preset_config(const std::string& name) {
  const json intensity = {{"kind", "log_linear"}, {"A", 750.0}, {"b", {0.0, -1.5}}, {"c", -1.5}};
  json j = {{"name", name},
            {"window", {{"lo", {0.0, 0.0}}, {"hi", {1.0, 1.0}}, {"t", {0.0, 1.0}}}},
            {"rt_grid", {{"r_step", 0.005}, {"r_count", 20}, {"t_step", 0.005}, {"t_count", 20}}},
            {"probes", {20, 20, 20}},
            {"seed", 20240101},
            {"out", "out/" + name}};
  if (name == "poisson_paper") {
    j["model"] = {{"kind", "poisson"}, {"intensity", intensity}};
    j["replicates"] = 100;
  } else if (name == "hardcore_paper") {
    j["model"] = {{"kind", "thinned_hardcore"},
                  {"beta", 1300.0},
                  {"spatial_radius", 0.05},
                  {"temporal_radius", 0.05},
                  {"mcmc_steps", 1000000},
                  {"torus", true},
                  {"retention", {{"kind", "log_linear"}, {"A", 1.0}, {"b", {0.0, -1.5}}, {"c", -1.5}}}};
    j["replicates"] = 50;
  } else if (name == "lgcp_paper") {
    j["model"] = {{"kind", "lgcp"},
                  {"intensity", intensity},
                  {"covariance",
                   {{"kind", "separable_mult"},
                    {"spatial", {{"var", 0.25}, {"delta", 2.0}}},
                    {"temporal", {{"var", 0.25}, {"delta", 1.0}}}}},
                  {"grid", {{"spatial", {32, 32}}, {"time", 32}}}};
    j["replicates"] = 50;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected poisson_paper, hardcore_paper or lgcp_paper)");
  }
  return from_json(j);
}

ExperimentConfig with_overrides(ExperimentConfig cfg, const ConfigOverrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.replicates) {
    if (*o.replicates < 0) throw ConfigError("replicates: must be >= 0");
    cfg.replicates = *o.replicates;
  }
  if (o.out) cfg.out = *o.out;
  cfg.canonical = to_json(cfg).dump();
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : cfg.canonical) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

ModelSimulator::ModelSimulator(const ModelConfig& model, const Window& w) : model_(model), window_(w) {
  if (!model_.intensity) throw ConfigError("model: missing intensity");
  switch (model_.kind) {
    case ModelKind::poisson:
      supremum(*model_.intensity, w);
      break;
    case ModelKind::thinned_hardcore:
      retention_.emplace(*model_.intensity, w);
      break;
    case ModelKind::lgcp:
      lgcp_.emplace(lgcp_mean_for_intensity(*model_.intensity, *model_.covariance), *model_.covariance,
                    CellGrid(w, model_.grid_spatial, model_.grid_time));
      break;
  }
}

Replicate ModelSimulator::simulate(std::uint64_t seed) const {
  switch (model_.kind) {
    case ModelKind::poisson:
      return {simulate_poisson(*model_.intensity, window_, seed), std::nullopt};
    case ModelKind::thinned_hardcore: {
      PointPattern full = simulate_hardcore(model_.hardcore, window_, derive_seed(seed, 0));
      PointPattern thinned = thin_pattern(full, *retention_, derive_seed(seed, 1));
      return {std::move(thinned), std::move(full)};
    }
    case ModelKind::lgcp:
      return {lgcp_->sample(seed).pattern, std::nullopt};
  }
  throw std::logic_error("unknown model kind");
}

IntensityField ModelSimulator::estimation_intensity(const PointPattern& p) const {
  if (model_.kind != ModelKind::thinned_hardcore) return *model_.intensity;
  const double mass = integrate(*model_.intensity, p.window());
  const double n = std::max<double>(1.0, static_cast<double>(p.size()));
  return model_.intensity->scaled(n / mass);
}

TestGrid probe_grid(const ExperimentConfig& cfg) { return make_probe_grid(cfg.window, cfg.probes); }

SummaryEstimate pool_estimates(std::span<const SummaryEstimate> estimates) {
  if (estimates.empty()) throw std::invalid_argument("pool_estimates: nothing to pool");
  SummaryEstimate out(estimates.front().grid);
  out.lambda_bar = estimates.front().lambda_bar;
  out.model = estimates.front().model;
  out.seed = estimates.front().seed;
  const auto R = out.grid.rows(), T = out.grid.cols();
  Eigen::ArrayXXd g_sum = Eigen::ArrayXXd::Zero(R, T), f_sum = g_sum, k_sum = g_sum;
  Eigen::ArrayXXi k_n = Eigen::ArrayXXi::Zero(R, T);
  out.n_centers.setZero();
  out.n_probes.setZero();
  for (const auto& e : estimates) {
    if (e.grid.r != out.grid.r || e.grid.t != out.grid.t)
      throw std::invalid_argument("pool_estimates: range grids differ");
    for (Eigen::Index j = 0; j < T; ++j)
      for (Eigen::Index i = 0; i < R; ++i) {
        if (e.n_centers(i, j) > 0) g_sum(i, j) += (1.0 - e.G_hat(i, j)) * e.n_centers(i, j);
        if (e.n_probes(i, j) > 0) f_sum(i, j) += (1.0 - e.F_hat(i, j)) * e.n_probes(i, j);
        if (!std::isnan(e.K_hat(i, j))) {
          k_sum(i, j) += e.K_hat(i, j);
          ++k_n(i, j);
        }
      }
    out.n_centers += e.n_centers;
    out.n_probes += e.n_probes;
  }
  for (Eigen::Index j = 0; j < T; ++j)
    for (Eigen::Index i = 0; i < R; ++i) {
      if (k_n(i, j) > 0) out.K_hat(i, j) = k_sum(i, j) / k_n(i, j);
      const double one_minus_g = g_sum(i, j) / out.n_centers(i, j);
      const double one_minus_f = f_sum(i, j) / out.n_probes(i, j);
      if (out.n_centers(i, j) > 0) out.G_hat(i, j) = 1.0 - one_minus_g;
      if (out.n_probes(i, j) > 0) out.F_hat(i, j) = 1.0 - one_minus_f;
      if (out.n_centers(i, j) > 0 && out.n_probes(i, j) > 0 && one_minus_f != 0.0)
        out.J_hat(i, j) = one_minus_g / one_minus_f;
    }
  return out;
}

void write_manifest(const RunManifest& m, const ExperimentConfig& cfg, const std::filesystem::path& path) {
  json j = {{"manifest_version", 1},
            {"command", m.command},
            {"config_hash", m.config_hash},
            {"config", json::parse(cfg.canonical)},
            {"master_seed", m.master_seed},
            {"replicate_seeds", m.replicate_seeds},
            {"version", m.version},
            {"wall_time_seconds", m.wall_time_seconds},
            {"outputs", m.outputs},
            {"status", m.complete ? "complete" : "running"}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write manifest " + path.string());
  os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

namespace {

// Qualitative signatures of the three model families on pooled estimates.
std::vector<std::pair<bool, std::string>> signature_checks(const ExperimentConfig& cfg,
                                                           const SummaryEstimate& pooled) {
  std::vector<std::pair<bool, std::string>> out;
  const auto& g = pooled.grid;
  std::ostringstream msg;
  switch (cfg.model.kind) {
    case ModelKind::poisson: {
      double gap = 0.0;
      for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i)
          if (!std::isnan(pooled.F_hat(i, j)) && !std::isnan(pooled.G_hat(i, j)))
            gap = std::max(gap, std::abs(pooled.F_hat(i, j) - pooled.G_hat(i, j)));
      msg << "poisson: max |F_hat - G_hat| = " << gap << " (threshold 0.05)";
      out.emplace_back(gap < 0.05, msg.str());
      break;
    }
    case ModelKind::thinned_hardcore: {
      int cells = 0, ok = 0;
      for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          if (g.r[static_cast<std::size_t>(i)] > cfg.model.hardcore.spatial_radius ||
              g.t[static_cast<std::size_t>(j)] > cfg.model.hardcore.temporal_radius)
            continue;
          ++cells;
          if (pooled.G_hat(i, j) < pooled.F_hat(i, j)) ++ok;
        }
      msg << "hard core: G_hat < F_hat in " << ok << " of " << cells
          << " cells with r <= R_S, t <= R_T";
      out.emplace_back(cells > 0 && ok == cells, msg.str());
      break;
    }
    case ModelKind::lgcp: {
      // Cells with r and t at or above the grid medians: the largest
      // cylinders, all well inside the temporal correlation range.
      auto median = [](const std::vector<double>& v) { return v[static_cast<std::size_t>(std::lround(0.5 * static_cast<double>(v.size() - 1)))]; };
      const double t_mid = median(g.t), r_mid = median(g.r);
      int cells = 0, ok = 0;
      for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          if (g.t[static_cast<std::size_t>(j)] < t_mid || g.r[static_cast<std::size_t>(i)] < r_mid) continue;
          ++cells;
          if (pooled.G_hat(i, j) > pooled.F_hat(i, j)) ++ok;
        }
      msg << "lgcp: G_hat > F_hat in " << ok << " of " << cells << " cells with r >= " << r_mid
          << ", t >= " << t_mid;
      out.emplace_back(cells > 0 && ok == cells, msg.str());
      break;
    }
  }
  return out;
}

std::vector<std::filesystem::path> default_patterns(const ExperimentConfig& cfg) {
  std::vector<std::filesystem::path> out;
  const auto dir = cfg.out / "patterns";
  if (!std::filesystem::exists(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("pattern_") && entry.path().extension() == ".csv") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

CommandResult cmd_simulate(const ExperimentConfig& cfg, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  CommandResult result;
  result.manifest = start_manifest("simulate", cfg);
  const auto manifest_path = cfg.out / "manifest_simulate.json";
  write_manifest(result.manifest, cfg, manifest_path);

  const auto n = static_cast<std::size_t>(cfg.replicates);
  std::vector<std::optional<Replicate>> reps(n);
  if (n > 0) {
    const ModelSimulator sim(cfg.model, cfg.window);
    parallel_for(n, jobs, [&](std::size_t i) { reps[i].emplace(sim.simulate(result.manifest.replicate_seeds[i])); });
  }
  std::size_t violations = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto path = cfg.out / "patterns" / ("pattern_" + pad(i) + ".csv");
    write_pattern(reps[i]->pattern, path);
    result.manifest.outputs.push_back(path.generic_string());
    if (reps[i]->unthinned) {
      const auto full = cfg.out / "patterns" / ("unthinned_" + pad(i) + ".csv");
      write_pattern(*reps[i]->unthinned, full);
      result.manifest.outputs.push_back(full.generic_string());
      violations += count_hardcore_violations(*reps[i]->unthinned, cfg.model.hardcore.spatial_radius,
                                              cfg.model.hardcore.temporal_radius, cfg.model.hardcore.torus);
    }
  }
  if (cfg.model.kind == ModelKind::thinned_hardcore && n > 0) {
    std::ostringstream msg;
    msg << "hard core: " << violations << " violating pairs over " << n << " unthinned realisations";
    result.verdicts.push_back(msg.str());
    result.ok = violations == 0;
  }
  result.manifest.complete = true;
  result.manifest.wall_time_seconds = elapsed(start);
  write_manifest(result.manifest, cfg, manifest_path);
  return result;
}

CommandResult cmd_estimate(const ExperimentConfig& cfg, const std::vector<std::filesystem::path>& patterns,
                           int jobs) {
  const auto start = std::chrono::steady_clock::now();
  CommandResult result;
  const auto files = patterns.empty() ? default_patterns(cfg) : patterns;
  if (files.empty()) throw ConfigError("estimate: no pattern files (run simulate first or pass files)");
  result.manifest = start_manifest("estimate", cfg);
  const auto manifest_path = cfg.out / "manifest_estimate.json";
  write_manifest(result.manifest, cfg, manifest_path);

  std::vector<PointPattern> loaded;
  loaded.reserve(files.size());
  for (const auto& f : files) {
    loaded.push_back(read_pattern(f));
    if (!(loaded.back().window() == cfg.window))
      throw DimensionMismatch("estimate: window of " + f.string() + " differs from the config window");
  }
  const ModelSimulator sim(cfg.model, cfg.window);
  const TestGrid probes = probe_grid(cfg);
  std::vector<std::optional<SummaryEstimate>> est(loaded.size());
  parallel_for(loaded.size(), jobs, [&](std::size_t i) {
    est[i].emplace(estimate_J(loaded[i], sim.estimation_intensity(loaded[i]), probes, cfg.rt_grid));
    est[i]->model = cfg.name;
  });
  std::vector<SummaryEstimate> all;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const auto path = cfg.out / "summaries" / ("summary_" + pad(i) + ".csv");
    write_summary_csv(*est[i], path);
    result.manifest.outputs.push_back(path.generic_string());
    all.push_back(std::move(*est[i]));
  }
  const SummaryEstimate pooled = pool_estimates(all);
  const auto pooled_path = cfg.out / "summary_pooled.csv";
  write_summary_csv(pooled, pooled_path);
  result.manifest.outputs.push_back(pooled_path.generic_string());
  for (auto& [ok, line] : signature_checks(cfg, pooled)) {
    result.verdicts.push_back(std::string(ok ? "PASS " : "FAIL ") + line);
    result.ok = result.ok && ok;
  }
  result.manifest.complete = true;
  result.manifest.wall_time_seconds = elapsed(start);
  write_manifest(result.manifest, cfg, manifest_path);
  return result;
}

CommandResult cmd_envelope(const ExperimentConfig& cfg, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  CommandResult result;
  result.manifest = start_manifest("envelope", cfg);
  result.manifest.replicate_seeds.clear();
  const std::uint64_t null_seed = derive_seed(cfg.seed, kEnvelopeStream);
  for (int i = 0; i < cfg.envelope.n_sim; ++i)
    result.manifest.replicate_seeds.push_back(derive_seed(null_seed, static_cast<std::uint64_t>(i)));
  const auto manifest_path = cfg.out / "manifest_envelope.json";
  write_manifest(result.manifest, cfg, manifest_path);

  const ModelSimulator sim(cfg.model, cfg.window);
  const TestGrid probes = probe_grid(cfg);
  const PointPattern observed = sim.simulate(derive_seed(cfg.seed, 0)).pattern;
  const IntensityField f_obs = sim.estimation_intensity(observed);
  SummaryEstimate obs = estimate_J(observed, f_obs, probes, cfg.rt_grid);
  obs.model = cfg.name;

  const bool poisson_null = cfg.envelope.null_model == "poisson";
  auto simulate_and_estimate = [&](std::uint64_t s) {
    if (poisson_null) return estimate_J(simulate_poisson(f_obs, cfg.window, s), f_obs, probes, cfg.rt_grid);
    const PointPattern p = sim.simulate(s).pattern;
    return estimate_J(p, sim.estimation_intensity(p), probes, cfg.rt_grid);
  };
  const Envelope env =
      envelope(simulate_and_estimate, cfg.envelope.statistic, cfg.envelope.n_sim, null_seed, cfg.envelope.alpha, jobs);
  const auto path = cfg.out / ("envelope_" + to_string(cfg.envelope.statistic) + ".csv");
  write_envelope_csv(obs, env, path);
  result.manifest.outputs.push_back(path.generic_string());

  const auto& values = statistic_values(obs, cfg.envelope.statistic);
  int cells = 0, below = 0, above = 0;
  for (Eigen::Index j = 0; j < values.cols(); ++j)
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      if (std::isnan(env.lo(i, j)) || std::isnan(values(i, j))) continue;
      ++cells;
      if (values(i, j) < env.lo(i, j)) ++below;
      if (values(i, j) > env.hi(i, j)) ++above;
    }
  std::ostringstream msg;
  msg << "envelope " << to_string(cfg.envelope.statistic) << " (" << cfg.envelope.null_model << " null, n_sim "
      << cfg.envelope.n_sim << "): observed outside in " << (below + above) << " of " << cells
      << " cells (below " << below << ", above " << above << ")";
  if (cfg.envelope.statistic == Statistic::J)
    msg << "; envelope covers 1 in " << 100.0 * envelope_coverage(env, 1.0) << "% of cells";
  result.verdicts.push_back(msg.str());

  result.manifest.complete = true;
  result.manifest.wall_time_seconds = elapsed(start);
  write_manifest(result.manifest, cfg, manifest_path);
  return result;
}

std::vector<std::filesystem::path> cmd_plot(const std::vector<std::filesystem::path>& summaries,
                                            const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& s : summaries) {
    const SummaryEstimate e = read_summary_csv(s);
    const auto written = write_slice_plots(e, out_dir / s.stem(), s.stem().string());
    out.insert(out.end(), written.begin(), written.end());
  }
  return out;
}

CommandResult cmd_reproduce_paper(const std::filesystem::path& out_root, const ConfigOverrides& o, int jobs,
                                  std::ostream& log) {
  CommandResult all;
  for (const auto& name : preset_names()) {
    ConfigOverrides local = o;
    local.out = out_root / name;
    const ExperimentConfig cfg = with_overrides(preset_config(name), local);
    log << "== " << name << " (" << cfg.replicates << " replicates, seed " << cfg.seed << ")\n";
    auto report = [&](const CommandResult& r) {
      for (const auto& v : r.verdicts) log << "  " << v << '\n';
      all.ok = all.ok && r.ok;
      all.verdicts.insert(all.verdicts.end(), r.verdicts.begin(), r.verdicts.end());
    };
    if (cfg.replicates == 0) {
      log << "  no replicates requested\n";
      continue;
    }
    report(cmd_simulate(cfg, jobs));
    report(cmd_estimate(cfg, {}, jobs));
    cmd_plot({cfg.out / "summary_pooled.csv"}, cfg.out / "plots");

    if (cfg.model.kind == ModelKind::thinned_hardcore) {
      std::vector<PointPattern> unthinned;
      for (int i = 0; i < cfg.replicates; ++i)
        unthinned.push_back(read_pattern(cfg.out / "patterns" / ("unthinned_" + pad(static_cast<std::size_t>(i)) + ".csv")));
      const RetentionFunction retention(*cfg.model.intensity, cfg.window);
      const auto diag = hardcore_papangelou(unthinned, cfg.model.hardcore, retention.p_bar(), probe_grid(cfg),
                                            0.025, 0.025);
      std::ostringstream msg;
      const bool ok = diag.beta_over_lambda >= 1.0;
      msg << (ok ? "PASS " : "FAIL ") << "hard core: beta / lambda_hat = " << diag.beta_over_lambda
          << " (lambda_hat " << diag.lambda_hat << "), conditional-intensity J(0.025, 0.025) = " << diag.J;
      CommandResult r;
      r.verdicts.push_back(msg.str());
      r.ok = ok;
      report(r);
    }
    CommandResult env = cmd_envelope(cfg, jobs);
    for (const auto& v : env.verdicts) log << "  " << v << '\n';
  }
  log << (all.ok ? "all checks passed\n" : "some checks failed\n");
  return all;
}

}  // namespace stpp
