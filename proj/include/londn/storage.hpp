// Dataset directories and denoiser weight bundles on disk.
//
//   dataset/meta.json
//   dataset/sample_%05d/gt.{hdr,cpx}
//   dataset/sample_%05d/smaps.{hdr,cpx}
//
//   weights/manifest.json      tensor names, shapes, denoiser config
//   weights/<tensor>.{hdr,cpx} one plane (shape[0] x rest), imag = 0
#pragma once

#include <json.hpp>

#include <cstdio>
#include <string>

#include "londn/denoiser.hpp"
#include "londn/io.hpp"
#include "londn/phantom.hpp"

namespace londn {

using json = nlohmann::json;

inline void write_json_atomic(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw IoError(path, std::string("invalid JSON: ") + e.what());
  }
}

inline std::string sample_dirname(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu", index);
  return buf;
}

inline json to_json(const PhantomSpec& s) {
  return {{"size", s.size},           {"n_clusters", s.n_clusters}, {"per_cluster", s.per_cluster},
          {"n_coils", s.n_coils},     {"jitter", s.jitter},         {"n_test", s.n_test}};
}

inline PhantomSpec phantom_spec_from_json(const json& j) {
  PhantomSpec s;
  s.size = j.at("size").get<std::size_t>();
  s.n_clusters = j.at("n_clusters").get<std::size_t>();
  s.per_cluster = j.at("per_cluster").get<std::size_t>();
  s.n_coils = j.at("n_coils").get<std::size_t>();
  s.jitter = j.at("jitter").get<double>();
  s.n_test = j.value("n_test", std::size_t{0});
  return s;
}

inline json dataset_meta(const Dataset& ds, std::uint64_t seed) {
  json samples = json::array();
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    samples.push_back({{"index", i},
                       {"dir", sample_dirname(i)},
                       {"cluster", ds.samples[i].cluster},
                       {"split", i < ds.spec.n_train() ? "train" : "test"}});
  return {{"format", "londn-dataset-1"},
          {"seed", seed},
          {"spec", to_json(ds.spec)},
          {"n_samples", ds.samples.size()},
          {"n_clusters", ds.spec.n_clusters},
          {"train", ds.train},
          {"test", ds.test},
          {"samples", samples}};
}

inline void write_dataset(const fs::path& dir, const Dataset& ds, std::uint64_t seed) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const fs::path sd = dir / sample_dirname(i);
    fs::create_directories(sd);
    write_complex(sd / "gt", ds.samples[i].gt);
    write_complex(sd / "smaps", ds.samples[i].smaps.maps());
  }
  write_json_atomic(dir / "meta.json", dataset_meta(ds, seed));
}

inline Dataset load_dataset(const fs::path& dir) {
  const json meta = read_json(dir / "meta.json");
  Dataset ds;
  try {
    ds.spec = phantom_spec_from_json(meta.at("spec"));
    for (const auto& s : meta.at("samples")) {
      const fs::path sd = dir / s.at("dir").get<std::string>();
      Sample smp{read_image(sd / "gt"), read_smaps(sd / "smaps"), s.at("cluster").get<std::size_t>()};
      const std::size_t idx = ds.samples.size();
      (s.at("split").get<std::string>() == "test" ? ds.test : ds.train).push_back(idx);
      ds.samples.push_back(std::move(smp));
    }
  } catch (const json::exception& e) {
    throw IoError(dir / "meta.json", std::string("malformed metadata: ") + e.what());
  }
  if (ds.samples.empty()) throw IoError(dir, "dataset has no samples");
  return ds;
}

inline json to_json(const DenoiserConfig& c) {
  return {{"n_layers", c.n_layers}, {"features", c.features}, {"kernel", c.kernel}, {"residual", c.residual}};
}

inline DenoiserConfig denoiser_config_from_json(const json& j) {
  DenoiserConfig c;
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.features = j.at("features").get<std::size_t>();
  c.kernel = j.at("kernel").get<std::size_t>();
  c.residual = j.at("residual").get<bool>();
  c.validate();
  return c;
}

inline void save_weights(const fs::path& dir, const DenoiserParams& params, const DenoiserConfig& cfg) {
  fs::create_directories(dir);
  json tensors = json::array();
  for (const auto& t : params) {
    const std::size_t rows = t.shape.empty() ? 1 : t.shape[0];
    const std::size_t cols = t.numel() / rows;
    ComplexImage plane(rows, cols);
    for (std::size_t k = 0; k < t.values.size(); ++k) plane[k] = t.values[k];
    write_complex(dir / t.name, plane);
    tensors.push_back({{"name", t.name}, {"shape", t.shape}});
  }
  write_json_atomic(dir / "manifest.json",
                    {{"format", "londn-weights-1"}, {"denoiser", to_json(cfg)}, {"tensors", tensors}});
}

struct LoadedWeights {
  DenoiserParams params;
  DenoiserConfig config;
};

inline LoadedWeights load_weights(const fs::path& dir) {
  const json man = read_json(dir / "manifest.json");
  LoadedWeights out;
  try {
    out.config = denoiser_config_from_json(man.at("denoiser"));
    std::vector<Tensor> ts;
    for (const auto& jt : man.at("tensors")) {
      Tensor t{jt.at("name").get<std::string>(), jt.at("shape").get<std::vector<std::size_t>>(), {}};
      const ComplexImage plane = read_image(dir / t.name);
      if (plane.size() != t.numel()) throw IoError(dir / t.name, "tensor size does not match manifest shape");
      for (const auto& z : plane.data()) t.values.push_back(z.real());
      ts.push_back(std::move(t));
    }
    out.params = DenoiserParams(std::move(ts));
  } catch (const json::exception& e) {
    throw IoError(dir / "manifest.json", std::string("malformed manifest: ") + e.what());
  }
  check_params(out.params, out.config);
  return out;
}

}  // namespace londn
