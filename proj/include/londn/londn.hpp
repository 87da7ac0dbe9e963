// Per-scan local training: alternate between finding the k training images
// nearest the current estimate and retraining the unrolled network on them.
#pragma once

#include <optional>
#include <vector>

#include "londn/neighbors.hpp"
#include "londn/storage.hpp"
#include "londn/unrolled.hpp"

namespace londn {

struct LondnConfig {
  std::size_t k = 30;
  std::size_t alternations = 2;
  std::size_t epochs = 200;
  std::size_t batch = 2;
  Metric metric = Metric::NCC;
  double l1_weight = 1e-9;
  bool oracle = false;
  LrSchedule schedule = LrSchedule::local();
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  /// Epoch default when the network is warm-started from pre-trained weights.
  static constexpr std::size_t kWarmStartEpochs = 10;

  void validate(std::size_t train_size) const {
    if (k < 1 || k > train_size)
      throw std::invalid_argument("LondnConfig: k=" + std::to_string(k) + " outside [1, " +
                                  std::to_string(train_size) + "]");
    if (alternations < 1) throw std::invalid_argument("LondnConfig: alternations must be >= 1");
    if (batch < 1) throw std::invalid_argument("LondnConfig: batch must be >= 1");
  }
};

/// Measurements of `gt` under `mask` and the zero-filled estimate. With
/// `noise_sigma` > 0, complex Gaussian noise of that standard deviation per
/// component is added to the sampled k-space entries.
inline TrainingPair simulate_pair(const ComplexImage& gt, const CoilSensitivities& smaps,
                                  const SamplingMask& mask, double noise_sigma = 0.0,
                                  Rng* noise_rng = nullptr) {
  ForwardModel model(mask, smaps);
  model.check_image(gt);
  MultiCoilKSpace ksp = forward(model, gt);
  if (noise_sigma > 0.0) {
    if (!noise_rng) throw std::invalid_argument("simulate_pair: noise requires an Rng");
    for (std::size_t c = 0; c < ksp.ncoils(); ++c)
      for (std::size_t k = 0; k < gt.size(); ++k)
        if (mask.grid()[k]) ksp[c][k] += noise_sigma * cplx(noise_rng->normal(), noise_rng->normal());
  }
  ComplexImage x0 = adjoint(model, ksp);
  return {std::move(x0), gt, std::move(model), std::move(ksp)};
}

/// Root-mean-square form of the bilevel upper-level cost: the k training
/// images nearest to `x` in l2, sqrt(mean_i ||x - x_i||^2 / q).
inline double upper_loss(const ComplexImage& x, const std::vector<ComplexImage>& gts, std::size_t k,
                         Metric metric = Metric::L2) {
  const NeighborSet nb = knn(x, gts, k, metric);
  double acc = 0.0;
  for (auto i : nb.indices) {
    const double d = distance(x, gts[i], Metric::L2);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(k) / static_cast<double>(x.size()));
}

struct TrainEntry {
  ComplexImage gt;
  CoilSensitivities smaps;
};

enum class QueryKind { Aliased, Estimate, GroundTruth };

inline const char* to_string(QueryKind q) {
  switch (q) {
    case QueryKind::Aliased: return "aliased";
    case QueryKind::Estimate: return "estimate";
    case QueryKind::GroundTruth: return "ground_truth";
  }
  return "?";
}

struct AlternationRecord {
  QueryKind query = QueryKind::Aliased;
  NeighborSet neighbors;
  std::vector<double> train_loss;
  double upper_loss = 0.0;
  ComplexImage estimate;  // x after this alternation's network update
};

struct LondnTrace {
  std::size_t k = 0;
  Metric metric = Metric::NCC;
  bool oracle = false;
  std::vector<AlternationRecord> alternations;
  /// Neighbors of the final estimate among ground-truth training images.
  NeighborSet final_search;
};

struct LondnResult {
  ComplexImage x;
  DenoiserParams params;
  LondnTrace trace;
};

/// Runs the alternating scheme on one scan.
///
/// Alternation 1 compares the zero-filled estimate against training images
/// simulated under the test mask; later alternations compare the current
/// estimate against ground-truth training images. Oracle mode queries with
/// the supplied ground truth and runs a single alternation. Weights carry
/// over between alternations; the optimizer state restarts with each local
/// training set.
inline LondnResult londn_reconstruct(const MultiCoilKSpace& test_ksp, const ForwardModel& test_model,
                                     const std::vector<TrainEntry>& trainset, const LondnConfig& cfg,
                                     const DenoiserConfig& dcfg, const UnrollConfig& ucfg,
                                     DenoiserParams initial,
                                     const std::optional<ComplexImage>& test_gt = std::nullopt) {
  cfg.validate(trainset.size());
  if (cfg.oracle && !test_gt) throw std::invalid_argument("oracle mode requires the ground-truth test image");
  check_params(initial, dcfg);

  const ComplexImage x0 = adjoint(test_model, test_ksp);
  std::vector<ComplexImage> gts;
  gts.reserve(trainset.size());
  for (const auto& e : trainset) gts.push_back(e.gt);

  // Training pairs under the test mask double as the aliased gallery.
  std::vector<std::optional<TrainingPair>> pairs(trainset.size());
  auto pair_for = [&](std::size_t i) -> const TrainingPair& {
    if (!pairs[i]) pairs[i] = simulate_pair(trainset[i].gt, trainset[i].smaps, test_model.mask);
    return *pairs[i];
  };

  LondnResult res;
  res.params = std::move(initial);
  res.trace.k = cfg.k;
  res.trace.metric = cfg.metric;
  res.trace.oracle = cfg.oracle;
  ComplexImage x = x0;
  const std::size_t S = cfg.oracle ? 1 : cfg.alternations;
  const Rng base(cfg.seed);

  for (std::size_t s = 0; s < S; ++s) {
    AlternationRecord rec;
    if (cfg.oracle) {
      rec.query = QueryKind::GroundTruth;
      rec.neighbors = knn(*test_gt, gts, cfg.k, cfg.metric, cfg.jobs);
    } else if (s == 0) {
      rec.query = QueryKind::Aliased;
      parallel_for(trainset.size(), cfg.jobs, [&](std::size_t i) {
        pairs[i] = simulate_pair(trainset[i].gt, trainset[i].smaps, test_model.mask);
      });
      std::vector<ComplexImage> aliased;
      aliased.reserve(trainset.size());
      for (std::size_t i = 0; i < trainset.size(); ++i) aliased.push_back(pairs[i]->x0);
      rec.neighbors = knn(x0, aliased, cfg.k, cfg.metric, cfg.jobs);
    } else {
      rec.query = QueryKind::Estimate;
      rec.neighbors = knn(x, gts, cfg.k, cfg.metric, cfg.jobs);
    }

    std::vector<TrainingPair> local;
    local.reserve(cfg.k);
    for (auto i : rec.neighbors.indices) local.push_back(pair_for(i));

    AdamState adam(res.params, cfg.schedule);
    Rng rng = base.split(s);
    TrainOptions opt;
    opt.epochs = cfg.epochs;
    opt.batch = cfg.batch;
    opt.l1_weight = cfg.l1_weight;
    opt.jobs = cfg.jobs;
    TrainResult tr = train(std::move(res.params), dcfg, ucfg, local, adam, rng, opt);
    res.params = std::move(tr.params);
    rec.train_loss = std::move(tr.epoch_loss);

    x = unroll_forward(res.params, dcfg, ucfg, x0, test_model, test_ksp);
    rec.upper_loss = upper_loss(x, gts, cfg.k);
    rec.estimate = x;
    res.trace.alternations.push_back(std::move(rec));
  }
  res.trace.final_search = knn(x, gts, cfg.k, cfg.metric, cfg.jobs);
  res.x = std::move(x);
  return res;
}

inline json neighbors_json(const NeighborSet& nb) {
  return {{"indices", nb.indices}, {"distances", nb.distances}};
}

inline NeighborSet neighbors_from_json(const json& j) {
  NeighborSet nb;
  nb.indices = j.at("indices").get<std::vector<std::size_t>>();
  nb.distances = j.at("distances").get<std::vector<double>>();
  return nb;
}

/// Trace JSON. `index_map` translates local trainset positions to dataset
/// sample indices (identity when empty).
inline json trace_json(const LondnTrace& t, const std::vector<std::size_t>& index_map = {}) {
  auto remap = [&](NeighborSet nb) {
    if (!index_map.empty())
      for (auto& i : nb.indices) i = index_map.at(i);
    return nb;
  };
  json alts = json::array();
  for (std::size_t s = 0; s < t.alternations.size(); ++s) {
    const auto& a = t.alternations[s];
    json j = neighbors_json(remap(a.neighbors));
    j["alternation"] = s + 1;
    j["query"] = to_string(a.query);
    j["upper_loss"] = a.upper_loss;
    j["train_loss"] = a.train_loss;
    alts.push_back(std::move(j));
  }
  return {{"k", t.k},
          {"metric", to_string(t.metric)},
          {"oracle", t.oracle},
          {"alternations", alts},
          {"final_search", neighbors_json(remap(t.final_search))}};
}

}  // namespace londn
