// Experiment building blocks shared by the command-line tool and the
// acceptance suite: global training over a dataset, per-scan reconstruction
// with each method, metric tables and neighbor-matching summaries.
#pragma once

#include <cstdio>
#include <optional>
#include <sstream>

#include "londn/config.hpp"
#include "londn/metrics.hpp"

namespace londn {

enum class Method { ZeroFilled, Global, Londn, Oracle };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::ZeroFilled: return "zero-filled";
    case Method::Global: return "global";
    case Method::Londn: return "londn";
    case Method::Oracle: return "oracle";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (auto m : {Method::ZeroFilled, Method::Global, Method::Londn, Method::Oracle})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown method '" + s + "' (expected zero-filled, global, londn or oracle)");
}

/// Independent random streams derived from the run seed.
namespace stream {
inline constexpr std::uint64_t kDataset = 1;
inline constexpr std::uint64_t kInitWeights = 2;
inline constexpr std::uint64_t kGlobalShuffle = 3;
inline constexpr std::uint64_t kTrainMask = std::uint64_t{1} << 40;
inline constexpr std::uint64_t kTestMask = std::uint64_t{2} << 40;
inline constexpr std::uint64_t kTestNoise = std::uint64_t{3} << 40;
inline constexpr std::uint64_t kTrainNoise = std::uint64_t{4} << 40;
inline constexpr std::uint64_t kLocal = std::uint64_t{5} << 40;
}  // namespace stream

inline Rng stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return Rng(seed).split(stream + index);
}

/// FNV-1a over the mask grid; used to log which mask each pair saw.
inline std::uint64_t mask_hash(const SamplingMask& m) {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto b : m.grid()) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Either one fixed mask for every scan, or a fresh draw from `spec` per scan.
struct MaskChoice {
  std::optional<SamplingMask> fixed;
  MaskSpec spec;

  SamplingMask for_sample(std::uint64_t seed, std::uint64_t stream_base, std::size_t index) const {
    if (fixed) return *fixed;
    Rng rng = stream_rng(seed, stream_base, index);
    return gen_mask(spec, rng);
  }
};

inline DenoiserParams initial_weights(const RunConfig& rc) {
  Rng rng = stream_rng(rc.seed, stream::kInitWeights);
  return init_params(rc.denoiser, rng);
}

struct GlobalTraining {
  DenoiserParams params;
  std::vector<double> epoch_loss;
  std::vector<std::size_t> samples;
  std::vector<std::uint64_t> mask_hashes;
};

/// Trains one network on every training sample of `ds`.
inline GlobalTraining train_global(const Dataset& ds, const MaskChoice& masks, const RunConfig& rc,
                                   std::optional<DenoiserParams> init = std::nullopt,
                                   std::function<void(std::size_t, double)> on_epoch = {}) {
  GlobalTraining out;
  std::vector<TrainingPair> pairs(ds.train.size());
  out.samples = ds.train;
  out.mask_hashes.resize(ds.train.size());
  parallel_for(ds.train.size(), rc.jobs, [&](std::size_t i) {
    const std::size_t s = ds.train[i];
    const SamplingMask mask = masks.for_sample(rc.seed, stream::kTrainMask, s);
    Rng noise = stream_rng(rc.seed, stream::kTrainNoise, s);
    pairs[i] = simulate_pair(ds.samples[s].gt, ds.samples[s].smaps, mask, rc.noise_sigma, &noise);
    out.mask_hashes[i] = mask_hash(mask);
  });
  DenoiserParams params = init ? std::move(*init) : initial_weights(rc);
  AdamState adam(params, rc.global.schedule);
  Rng rng = stream_rng(rc.seed, stream::kGlobalShuffle);
  TrainOptions opt;
  opt.epochs = rc.global.epochs;
  opt.batch = rc.global.batch;
  opt.l1_weight = rc.global.l1_weight;
  opt.jobs = rc.jobs;
  opt.on_epoch = std::move(on_epoch);
  TrainResult tr = train(std::move(params), rc.denoiser, rc.unroll, pairs, adam, rng, opt);
  out.params = std::move(tr.params);
  out.epoch_loss = std::move(tr.epoch_loss);
  return out;
}

struct ScanResult {
  std::size_t index = 0;
  Method method = Method::ZeroFilled;
  ComplexImage x;
  ComplexImage x0;
  SamplingMask mask;
  /// LONDN and oracle only; neighbor indices are dataset sample indices.
  std::optional<LondnTrace> trace;
};

/// Training entries for a scan: the training split without the scan itself.
inline std::vector<std::size_t> train_indices_excluding(const Dataset& ds, std::size_t index) {
  std::vector<std::size_t> out;
  for (auto i : ds.train)
    if (i != index) out.push_back(i);
  return out;
}

inline void remap(NeighborSet& nb, const std::vector<std::size_t>& ids) {
  for (auto& i : nb.indices) i = ids.at(i);
}

/// Reconstructs dataset sample `index` from simulated measurements.
/// `weights` initializes LONDN (warm start) and is required for the global
/// method; `jobs` is the worker count inside this one scan.
inline ScanResult reconstruct_scan(const Dataset& ds, std::size_t index, Method method, const MaskChoice& masks,
                                   const RunConfig& rc, const DenoiserParams* weights, std::size_t jobs = 1) {
  if (index >= ds.samples.size()) throw std::invalid_argument("test index " + std::to_string(index) + " out of range");
  const Sample& s = ds.samples[index];
  ScanResult out;
  out.index = index;
  out.method = method;
  out.mask = masks.for_sample(rc.seed, stream::kTestMask, index);
  Rng noise = stream_rng(rc.seed, stream::kTestNoise, index);
  const TrainingPair meas = simulate_pair(s.gt, s.smaps, out.mask, rc.noise_sigma, &noise);
  out.x0 = meas.x0;
  switch (method) {
    case Method::ZeroFilled:
      out.x = meas.x0;
      break;
    case Method::Global:
      if (!weights) throw std::invalid_argument("the global method needs trained weights");
      check_params(*weights, rc.denoiser);
      out.x = unroll_forward(*weights, rc.denoiser, rc.unroll, meas.x0, meas.model, meas.ksp);
      break;
    case Method::Londn:
    case Method::Oracle: {
      const auto ids = train_indices_excluding(ds, index);
      std::vector<TrainEntry> trainset;
      for (auto i : ids) trainset.push_back({ds.samples[i].gt, ds.samples[i].smaps});
      LondnConfig cfg = rc.londn_config(weights != nullptr);
      cfg.oracle = method == Method::Oracle;
      cfg.seed = stream_rng(rc.seed, stream::kLocal, index).seed();
      cfg.jobs = jobs;
      LondnResult res = londn_reconstruct(meas.ksp, meas.model, trainset, cfg, rc.denoiser, rc.unroll,
                                          weights ? *weights : initial_weights(rc),
                                          cfg.oracle ? std::optional<ComplexImage>(s.gt) : std::nullopt);
      for (auto& a : res.trace.alternations) remap(a.neighbors, ids);
      remap(res.trace.final_search, ids);
      out.x = std::move(res.x);
      out.trace = std::move(res.trace);
      break;
    }
  }
  return out;
}

/// Ground-truth neighbors of a scan among the other training images, in
/// dataset indices.
inline NeighborSet oracle_neighbors(const Dataset& ds, std::size_t index, std::size_t k, Metric metric) {
  const auto ids = train_indices_excluding(ds, index);
  std::vector<ComplexImage> gts;
  for (auto i : ids) gts.push_back(ds.samples[i].gt);
  NeighborSet nb = knn(ds.samples[index].gt, gts, k, metric);
  remap(nb, ids);
  return nb;
}

/// upper_loss evaluated at the ground truth itself.
inline double oracle_upper_loss(const Dataset& ds, std::size_t index, std::size_t k) {
  std::vector<ComplexImage> gts;
  for (auto i : train_indices_excluding(ds, index)) gts.push_back(ds.samples[i].gt);
  return upper_loss(ds.samples[index].gt, gts, k);
}

struct MetricRow {
  std::string id;
  MetricReport report;
};

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

/// "image_id,psnr,ssim,hfen" rows followed by a "mean" row.
inline std::string metrics_csv(const std::vector<MetricRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("metrics_csv: no rows");
  std::ostringstream os;
  os << "image_id,psnr,ssim,hfen\n";
  MetricReport mean;
  for (const auto& r : rows) {
    os << r.id << "," << fixed6(r.report.psnr_db) << "," << fixed6(r.report.ssim) << "," << fixed6(r.report.hfen) << "\n";
    mean.psnr_db += r.report.psnr_db;
    mean.ssim += r.report.ssim;
    mean.hfen += r.report.hfen;
  }
  const double n = static_cast<double>(rows.size());
  os << "mean," << fixed6(mean.psnr_db / n) << "," << fixed6(mean.ssim / n) << "," << fixed6(mean.hfen / n) << "\n";
  return os.str();
}

}  // namespace londn
