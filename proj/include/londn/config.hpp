// Run configuration: one JSON document covering data generation, masks, the
// network, the unrolled solver, global and local training. Unknown keys are
// rejected so a typo cannot silently fall back to a default.
#pragma once

#include <optional>
#include <set>
#include <string>

#include "londn/londn.hpp"

namespace londn {

struct GlobalTrainSettings {
  std::size_t epochs = 20;
  std::size_t batch = 2;
  double l1_weight = 1e-9;
  LrSchedule schedule = LrSchedule::global();

  friend bool operator==(const GlobalTrainSettings&, const GlobalTrainSettings&) = default;
};

struct LocalSettings {
  std::size_t k = 30;
  std::size_t alternations = 2;
  /// Unset: 200 epochs from random weights, 10 when warm-started.
  std::optional<std::size_t> epochs;
  std::size_t batch = 2;
  Metric metric = Metric::NCC;
  double l1_weight = 1e-9;
  bool oracle = false;
  std::string warm_start;
  LrSchedule schedule = LrSchedule::local();

  friend bool operator==(const LocalSettings&, const LocalSettings&) = default;
};

struct PathSettings {
  std::string dataset;
  std::string weights;
  std::string output;

  friend bool operator==(const PathSettings&, const PathSettings&) = default;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  double noise_sigma = 0.0;
  PhantomSpec phantom;
  MaskSpec mask{4.0, MaskSpec::default_center_lines(64, 4.0), 64, 64, 0};
  DenoiserConfig denoiser;
  UnrollConfig unroll;
  GlobalTrainSettings global;
  LocalSettings londn;
  PathSettings paths;

  LondnConfig londn_config(bool warm) const {
    LondnConfig c;
    c.k = londn.k;
    c.alternations = londn.alternations;
    c.epochs = londn.epochs.value_or(warm ? LondnConfig::kWarmStartEpochs : std::size_t{200});
    c.batch = londn.batch;
    c.metric = londn.metric;
    c.l1_weight = londn.l1_weight;
    c.oracle = londn.oracle;
    c.schedule = londn.schedule;
    c.seed = seed;
    c.jobs = jobs;
    return c;
  }

  void validate() const {
    phantom.validate();
    mask.validate();
    denoiser.validate();
    unroll.validate();
    if (jobs == 0) throw std::invalid_argument("config: jobs must be >= 1");
    if (londn.alternations < 1) throw std::invalid_argument("config: londn.alternations must be >= 1");
    if (londn.k < 1) throw std::invalid_argument("config: londn.k must be >= 1");
    if (londn.batch < 1 || global.batch < 1) throw std::invalid_argument("config: batch must be >= 1");
    if (noise_sigma < 0.0) throw std::invalid_argument("config: noise_sigma must be >= 0");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Reads fields from one JSON object and complains about anything left over.
class StrictObject {
 public:
  StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline json schedule_json(const LrSchedule& s) {
  return {{"base", s.base}, {"milestones", s.milestones}, {"decay", s.decay}};
}

inline void read_schedule(const json& j, const std::string& where, LrSchedule& s) {
  StrictObject o(j, where);
  o.get("base", s.base);
  o.get("milestones", s.milestones);
  o.get("decay", s.decay);
  o.finish();
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"noise_sigma", c.noise_sigma},
      {"phantom", to_json(c.phantom)},
      {"mask",
       {{"accel", c.mask.accel},
        {"center_lines", c.mask.center_lines},
        {"width", c.mask.width},
        {"height", c.mask.height},
        {"seed", c.mask.seed}}},
      {"denoiser", to_json(c.denoiser)},
      {"unroll",
       {{"blocks", c.unroll.blocks},
        {"nu", c.unroll.nu},
        {"mu_over_nu", c.unroll.mu_over_nu},
        {"cg_tol", c.unroll.cg_tol},
        {"cg_max_iter", c.unroll.cg_max_iter}}},
      {"global",
       {{"epochs", c.global.epochs},
        {"batch", c.global.batch},
        {"l1_weight", c.global.l1_weight},
        {"schedule", detail::schedule_json(c.global.schedule)}}},
      {"londn",
       {{"k", c.londn.k},
        {"alternations", c.londn.alternations},
        {"epochs", c.londn.epochs ? json(*c.londn.epochs) : json(nullptr)},
        {"batch", c.londn.batch},
        {"metric", to_string(c.londn.metric)},
        {"l1_weight", c.londn.l1_weight},
        {"oracle", c.londn.oracle},
        {"warm_start", c.londn.warm_start},
        {"schedule", detail::schedule_json(c.londn.schedule)}}},
      {"paths", {{"dataset", c.paths.dataset}, {"weights", c.paths.weights}, {"output", c.paths.output}}},
  };
}

/// Missing keys keep their defaults; unknown keys throw ConfigError.
inline RunConfig run_config_from_json(const json& j) {
  using detail::StrictObject;
  RunConfig c;
  StrictObject top(j, "config");
  top.get("seed", c.seed);
  top.get("jobs", c.jobs);
  top.get("noise_sigma", c.noise_sigma);
  if (const json* p = top.child("phantom")) {
    StrictObject o(*p, "phantom");
    o.get("size", c.phantom.size);
    o.get("n_clusters", c.phantom.n_clusters);
    o.get("per_cluster", c.phantom.per_cluster);
    o.get("n_coils", c.phantom.n_coils);
    o.get("jitter", c.phantom.jitter);
    o.get("n_test", c.phantom.n_test);
    o.finish();
  }
  if (const json* p = top.child("mask")) {
    StrictObject o(*p, "mask");
    o.get("accel", c.mask.accel);
    o.get("center_lines", c.mask.center_lines);
    o.get("width", c.mask.width);
    o.get("height", c.mask.height);
    o.get("seed", c.mask.seed);
    o.finish();
  }
  if (const json* p = top.child("denoiser")) {
    StrictObject o(*p, "denoiser");
    o.get("n_layers", c.denoiser.n_layers);
    o.get("features", c.denoiser.features);
    o.get("kernel", c.denoiser.kernel);
    o.get("residual", c.denoiser.residual);
    o.finish();
  }
  if (const json* p = top.child("unroll")) {
    StrictObject o(*p, "unroll");
    o.get("blocks", c.unroll.blocks);
    o.get("nu", c.unroll.nu);
    o.get("mu_over_nu", c.unroll.mu_over_nu);
    o.get("cg_tol", c.unroll.cg_tol);
    o.get("cg_max_iter", c.unroll.cg_max_iter);
    o.finish();
  }
  if (const json* p = top.child("global")) {
    StrictObject o(*p, "global");
    o.get("epochs", c.global.epochs);
    o.get("batch", c.global.batch);
    o.get("l1_weight", c.global.l1_weight);
    if (const json* s = o.child("schedule")) detail::read_schedule(*s, "global.schedule", c.global.schedule);
    o.finish();
  }
  if (const json* p = top.child("londn")) {
    StrictObject o(*p, "londn");
    o.get("k", c.londn.k);
    o.get("alternations", c.londn.alternations);
    o.get("epochs", c.londn.epochs);
    o.get("batch", c.londn.batch);
    std::string metric = to_string(c.londn.metric);
    o.get("metric", metric);
    try {
      c.londn.metric = parse_metric(metric);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("londn.metric: ") + e.what());
    }
    o.get("l1_weight", c.londn.l1_weight);
    o.get("oracle", c.londn.oracle);
    o.get("warm_start", c.londn.warm_start);
    if (const json* s = o.child("schedule")) detail::read_schedule(*s, "londn.schedule", c.londn.schedule);
    o.finish();
  }
  if (const json* p = top.child("paths")) {
    StrictObject o(*p, "paths");
    o.get("dataset", c.paths.dataset);
    o.get("weights", c.paths.weights);
    o.get("output", c.paths.output);
    o.finish();
  }
  top.finish();
  return c;
}

inline RunConfig load_run_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace londn
