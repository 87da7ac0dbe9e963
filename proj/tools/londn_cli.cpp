// londn: data generation, global training, per-scan reconstruction and
// evaluation. Exit codes: 0 success, 1 usage or config error, 2 runtime failure.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <regex>

#include "londn/experiment.hpp"

namespace {

using namespace londn;

/// Bad flags or inconsistent inputs; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::mutex log_mu;

template <class... Args>
void log(const char* fmt, Args... args) {
  std::lock_guard<std::mutex> lock(log_mu);
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Options every command accepts.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool print_config = false;

  void add(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Run seed");
    app->add_option("--jobs", jobs, "Worker threads");
    app->add_flag("--print-config", print_config, "Print the effective configuration and exit");
  }

  RunConfig base() const {
    RunConfig rc = config.empty() ? RunConfig{} : load_run_config(config);
    if (seed) rc.seed = *seed;
    if (jobs) rc.jobs = *jobs;
    return rc;
  }
};

/// Validates and optionally echoes; returns true when the command should stop.
bool finish_config(const RunConfig& rc, const Common& common) {
  try {
    rc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (common.print_config) {
    std::cout << to_json(rc).dump(2) << "\n";
    return true;
  }
  return false;
}

template <class T>
void override(std::optional<T> flag, T& field) {
  if (flag) field = *flag;
}

std::string require_path(const std::string& flag_value, const std::string& config_value, const char* name) {
  const std::string& v = flag_value.empty() ? config_value : flag_value;
  if (v.empty()) throw UsageError(std::string("missing ") + name);
  return v;
}

/// Mask spec matching the dataset's image size.
MaskSpec mask_spec_for(const RunConfig& rc, std::size_t size) {
  MaskSpec m = rc.mask;
  if (m.width != size || m.height != size) {
    m.width = m.height = size;
    m.center_lines = MaskSpec::default_center_lines(size, m.accel);
  }
  return m;
}

/// "random", "fixed:<stem>" or a bare mask stem.
MaskChoice parse_mask_choice(const std::string& arg, const RunConfig& rc, std::size_t size) {
  MaskChoice mc;
  mc.spec = mask_spec_for(rc, size);
  if (arg == "random") return mc;
  const std::string stem = arg.rfind("fixed:", 0) == 0 ? arg.substr(6) : arg;
  if (stem.empty()) throw UsageError("--mask: empty mask path");
  mc.fixed = read_mask(stem);
  if (mc.fixed->height() != size || mc.fixed->width() != size)
    throw UsageError("mask is " + std::to_string(mc.fixed->height()) + "x" + std::to_string(mc.fixed->width()) +
                     " but the dataset images are " + std::to_string(size) + "x" + std::to_string(size));
  return mc;
}

std::string indexed_name(const char* prefix, std::size_t index, const char* ext = "") {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu%s", prefix, index, ext);
  return buf;
}

/// Files named <prefix>_NNNNN<ext> in `dir`, keyed by index.
std::map<std::size_t, fs::path> indexed_files(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  if (!fs::is_directory(dir)) throw IoError(dir, "not a directory");
  const std::regex re(prefix + "_([0-9]+)" + std::regex_replace(ext, std::regex("\\."), "\\."));
  std::map<std::size_t, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (std::regex_match(name, m, re)) out[std::stoul(m[1].str())] = e.path();
  }
  return out;
}

LoadedWeights load_weights_checked(const std::string& dir) {
  LoadedWeights w = load_weights(dir);
  check_params(w.params, w.config);
  return w;
}

// ---------------------------------------------------------------- gen-data

struct GenData {
  Common common;
  std::string out;
  std::optional<std::size_t> size, clusters, per_cluster, coils, n_test;
  std::optional<double> jitter;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("gen-data", "Generate a clustered phantom dataset");
    common.add(c);
    c->add_option("--out", out, "Dataset directory");
    c->add_option("--size", size, "Image side length");
    c->add_option("--clusters", clusters, "Number of anatomy clusters");
    c->add_option("--per-cluster", per_cluster, "Training images per cluster");
    c->add_option("--coils", coils, "Receive coils");
    c->add_option("--jitter", jitter, "Within-cluster perturbation scale");
    c->add_option("--test", n_test, "Extra test images");
    c->callback([this] { run(); });
  }

  void run() {
    RunConfig rc = common.base();
    override(size, rc.phantom.size);
    override(clusters, rc.phantom.n_clusters);
    override(per_cluster, rc.phantom.per_cluster);
    override(coils, rc.phantom.n_coils);
    override(jitter, rc.phantom.jitter);
    override(n_test, rc.phantom.n_test);
    if (!out.empty()) rc.paths.dataset = out;
    if (finish_config(rc, common)) return;
    const fs::path dir = require_path(out, rc.paths.dataset, "--out");
    const Dataset ds = gen_dataset(rc.phantom, stream_rng(rc.seed, stream::kDataset));
    write_dataset(dir, ds, rc.seed);
    std::printf("wrote %zu samples (%zu clusters, %zu train, %zu test) to %s\n", ds.samples.size(),
                rc.phantom.n_clusters, ds.train.size(), ds.test.size(), dir.string().c_str());
  }
};

// ---------------------------------------------------------------- gen-mask

struct GenMask {
  Common common;
  std::string out;
  std::optional<double> accel;
  std::optional<std::size_t> center, width, height;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("gen-mask", "Generate a 1-D variable-density column mask");
    common.add(c);
    c->add_option("--out", out, "Output stem (<out>.msk)")->required();
    c->add_option("--accel", accel, "Acceleration factor");
    c->add_option("--center", center, "Fully sampled center columns");
    c->add_option("--width", width, "Columns");
    c->add_option("--height", height, "Rows (default: width)");
    c->callback([this] { run(); });
  }

  void run() {
    RunConfig rc = common.base();
    MaskSpec& m = rc.mask;
    override(accel, m.accel);
    if (width) {
      m.width = *width;
      if (!height) m.height = *width;
    }
    override(height, m.height);
    if (center)
      m.center_lines = *center;
    else if (accel || width)
      m.center_lines = MaskSpec::default_center_lines(m.width, m.accel);
    if (common.seed) m.seed = *common.seed;
    if (finish_config(rc, common)) return;
    const SamplingMask mask = gen_mask(m);
    write_mask(out, mask);
    std::printf("sampled %zu of %zu columns (center %zu, accel %g) -> %s\n", mask.sampled_columns(), m.width,
                m.center_lines, m.accel, detail::with_suffix(out, ".msk").string().c_str());
  }
};

// ---------------------------------------------------------------- train-global

struct TrainGlobal {
  Common common;
  std::string dataset, mask = "random", out_weights, init_weights;
  std::optional<std::size_t> epochs, batch;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("train-global", "Train one network on the whole training split");
    common.add(c);
    c->add_option("--dataset", dataset, "Dataset directory");
    c->add_option("--mask", mask, "fixed:<stem> or random (a fresh mask per training image)");
    c->add_option("--out-weights", out_weights, "Output weights directory");
    c->add_option("--init-weights", init_weights, "Start from these weights instead of a random init");
    c->add_option("--epochs", epochs, "Training epochs");
    c->add_option("--batch", batch, "Minibatch size");
    c->callback([this] { run(); });
  }

  void run() {
    RunConfig rc = common.base();
    override(epochs, rc.global.epochs);
    override(batch, rc.global.batch);
    if (!dataset.empty()) rc.paths.dataset = dataset;
    if (!out_weights.empty()) rc.paths.weights = out_weights;
    std::optional<DenoiserParams> init;
    if (!init_weights.empty()) {
      LoadedWeights w = load_weights_checked(init_weights);
      rc.denoiser = w.config;
      init = std::move(w.params);
    }
    if (finish_config(rc, common)) return;
    const fs::path out = require_path(out_weights, rc.paths.weights, "--out-weights");
    const Dataset ds = load_dataset(require_path(dataset, rc.paths.dataset, "--dataset"));
    if (ds.train.empty()) throw UsageError("dataset has no training images");
    const MaskChoice masks = parse_mask_choice(mask, rc, ds.spec.size);
    const auto t0 = std::chrono::steady_clock::now();
    GlobalTraining g = train_global(ds, masks, rc, std::move(init), [&](std::size_t e, double loss) {
      log("epoch %zu/%zu  loss %.6g  (%.1f s)", e + 1, rc.global.epochs, loss, seconds_since(t0));
    });
    save_weights(out, g.params, rc.denoiser);
    std::ostringstream loss;
    write_loss_csv(loss, g.epoch_loss);
    write_file_atomic(out / "loss.csv", loss.str());
    std::ostringstream ml;
    ml << "sample,mask_hash\n";
    for (std::size_t i = 0; i < g.samples.size(); ++i) {
      char hex[32];
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(g.mask_hashes[i]));
      ml << g.samples[i] << "," << hex << "\n";
    }
    write_file_atomic(out / "masks.csv", ml.str());
    write_json_atomic(out / "run_config.json", to_json(rc));
    std::printf("trained on %zu pairs for %zu epochs, final loss %.6g -> %s\n", g.samples.size(),
                rc.global.epochs, g.epoch_loss.empty() ? 0.0 : g.epoch_loss.back(), out.string().c_str());
  }
};

// ---------------------------------------------------------------- reconstruct

struct Reconstruct {
  Common common;
  std::string method, dataset, mask = "random", weights, out;
  std::vector<std::size_t> test_index;
  std::optional<std::size_t> k, alternations, epochs;
  std::optional<std::string> metric;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("reconstruct", "Reconstruct test scans");
    common.add(c);
    c->add_option("--method", method, "zero-filled, global, londn or oracle")->required();
    c->add_option("--dataset", dataset, "Dataset directory");
    c->add_option("--test-index", test_index, "Sample index to reconstruct (repeatable; default: test split)");
    c->add_option("--mask", mask, "fixed:<stem> or random (a fresh mask per scan)");
    c->add_option("--weights", weights, "Trained weights (global) or warm start (londn, oracle)");
    c->add_option("--out", out, "Output directory");
    c->add_option("--k", k, "Neighbors per scan");
    c->add_option("--alternations", alternations, "Search/train alternations");
    c->add_option("--epochs", epochs, "Local epochs per alternation");
    c->add_option("--metric", metric, "Neighbor metric: l1, l2 or ncc");
    c->callback([this] { run(); });
  }

  void run() {
    const Method m = parse_method_usage(method);
    RunConfig rc = common.base();
    override(k, rc.londn.k);
    override(alternations, rc.londn.alternations);
    if (epochs) rc.londn.epochs = *epochs;
    if (metric) {
      try {
        rc.londn.metric = parse_metric(*metric);
      } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--metric: ") + e.what());
      }
    }
    if (!dataset.empty()) rc.paths.dataset = dataset;
    if (!out.empty()) rc.paths.output = out;
    std::string wdir = weights;
    if (wdir.empty()) wdir = m == Method::Global ? rc.paths.weights : rc.londn.warm_start;
    std::optional<DenoiserParams> w;
    if (!wdir.empty() && m != Method::ZeroFilled) {
      LoadedWeights lw = load_weights_checked(wdir);
      rc.denoiser = lw.config;
      w = std::move(lw.params);
    }
    if (m == Method::Global && !w) throw UsageError("--method global needs --weights");
    if (finish_config(rc, common)) return;
    const fs::path odir = require_path(out, rc.paths.output, "--out");
    const Dataset ds = load_dataset(require_path(dataset, rc.paths.dataset, "--dataset"));
    std::vector<std::size_t> scans = test_index.empty() ? ds.test : test_index;
    if (scans.empty()) throw UsageError("no test scans: pass --test-index or use a dataset with a test split");
    for (auto i : scans)
      if (i >= ds.samples.size()) throw UsageError("--test-index " + std::to_string(i) + " out of range");
    const MaskChoice masks = parse_mask_choice(mask, rc, ds.spec.size);
    fs::create_directories(odir);
    const std::size_t outer = std::min(rc.jobs, scans.size());
    const std::size_t inner = scans.size() == 1 ? rc.jobs : 1;
    parallel_for(scans.size(), outer, [&](std::size_t j) {
      const auto t0 = std::chrono::steady_clock::now();
      const ScanResult r = reconstruct_scan(ds, scans[j], m, masks, rc, w ? &*w : nullptr, inner);
      write_complex(odir / indexed_name("recon", r.index), r.x);
      if (!masks.fixed) write_mask(odir / indexed_name("mask", r.index), r.mask);
      if (r.trace) write_json_atomic(odir / indexed_name("trace", r.index, ".json"), trace_json(*r.trace));
      const MetricReport rep = evaluate(r.x, ds.samples[r.index].gt);
      log("scan %zu  %s  psnr %.2f dB  (%.1f s)", r.index, to_string(m), rep.psnr_db, seconds_since(t0));
    });
    write_json_atomic(odir / "run_config.json", to_json(rc));
    std::printf("reconstructed %zu scans with %s -> %s\n", scans.size(), to_string(m), odir.string().c_str());
  }

  static Method parse_method_usage(const std::string& s) {
    try {
      return parse_method(s);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

// ---------------------------------------------------------------- eval

struct Eval {
  std::string recon_dir, dataset, out_csv;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("eval", "Score reconstructions against the ground truth");
    c->add_option("--recon-dir", recon_dir, "Directory of recon_NNNNN.{hdr,cpx}")->required();
    c->add_option("--dataset", dataset, "Dataset directory")->required();
    c->add_option("--out-csv", out_csv, "Write the table here instead of stdout");
    c->callback([this] { run(); });
  }

  void run() {
    const auto files = indexed_files(recon_dir, "recon", ".hdr");
    if (files.empty()) throw IoError(recon_dir, "no recon_NNNNN.hdr files");
    const Dataset ds = load_dataset(dataset);
    std::vector<MetricRow> rows;
    for (const auto& [idx, path] : files) {
      if (idx >= ds.samples.size()) throw UsageError("recon index " + std::to_string(idx) + " not in dataset");
      const fs::path stem = path.parent_path() / path.stem();
      rows.push_back({std::to_string(idx), evaluate(read_image(stem), ds.samples[idx].gt)});
    }
    const std::string csv = metrics_csv(rows);
    if (out_csv.empty())
      std::cout << csv;
    else
      write_file_atomic(out_csv, csv);
  }
};

// ---------------------------------------------------------------- nma

struct Nma {
  std::string trace_dir, dataset, out_csv;
  std::optional<std::size_t> k;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("nma", "Neighbor-matching accuracy of LONDN traces");
    c->add_option("--trace-dir", trace_dir, "Directory of trace_NNNNN.json")->required();
    c->add_option("--dataset", dataset, "Dataset directory")->required();
    c->add_option("--k", k, "Expected neighbor count (default: from the traces)");
    c->add_option("--out-csv", out_csv, "Write the table here instead of stdout");
    c->callback([this] { run(); });
  }

  void run() {
    const auto files = indexed_files(trace_dir, "trace", ".json");
    if (files.empty()) throw IoError(trace_dir, "no trace_NNNNN.json files");
    const Dataset ds = load_dataset(dataset);
    std::vector<std::vector<NeighborSet>> found;  // per search, per scan
    std::vector<NeighborSet> oracle;
    std::size_t kk = 0;
    for (const auto& [idx, path] : files) {
      if (idx >= ds.samples.size()) throw UsageError("trace index " + std::to_string(idx) + " not in dataset");
      const json t = read_json(path);
      std::vector<NeighborSet> searches;
      Metric metric;
      std::size_t tk;
      try {
        tk = t.at("k").get<std::size_t>();
        metric = parse_metric(t.at("metric").get<std::string>());
        for (const auto& a : t.at("alternations")) searches.push_back(neighbors_from_json(a));
        searches.push_back(neighbors_from_json(t.at("final_search")));
      } catch (const std::exception& e) {
        throw IoError(path, std::string("malformed trace: ") + e.what());
      }
      if (k && *k != tk) throw UsageError("--k " + std::to_string(*k) + " differs from trace k " + std::to_string(tk));
      if (kk == 0) kk = tk;
      if (tk != kk) throw IoError(path, "traces disagree on k");
      if (found.empty()) found.resize(searches.size());
      if (searches.size() != found.size()) throw IoError(path, "traces disagree on the number of alternations");
      for (std::size_t s = 0; s < searches.size(); ++s) found[s].push_back(std::move(searches[s]));
      oracle.push_back(oracle_neighbors(ds, idx, tk, metric));
    }
    std::ostringstream os;
    os << "search,nma_percent\n";
    for (std::size_t s = 0; s < found.size(); ++s) {
      const std::string name = s + 1 == found.size() ? "final" : "alternation_" + std::to_string(s + 1);
      os << name << "," << fixed6(nma(found[s], oracle, kk)) << "\n";
    }
    if (out_csv.empty())
      std::cout << os.str();
    else
      write_file_atomic(out_csv, os.str());
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LONDN MRI reconstruction toolkit"};
  app.require_subcommand(1);
  GenData gen_data;
  GenMask gen_mask_cmd;
  TrainGlobal train_global_cmd;
  Reconstruct reconstruct;
  Eval eval;
  Nma nma_cmd;
  gen_data.add(app);
  gen_mask_cmd.add(app);
  train_global_cmd.add(app);
  reconstruct.add(app);
  eval.add(app);
  nma_cmd.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
