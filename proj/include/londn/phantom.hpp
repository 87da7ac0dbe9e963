// Synthetic data: variable-density Cartesian masks, simulated coil maps and
// cluster-structured ellipse phantoms.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "londn/image.hpp"

namespace londn {

struct MaskSpec {
  double accel = 4.0;
  std::size_t center_lines = 8;
  std::size_t width = 64;
  std::size_t height = 64;
  std::uint64_t seed = 0;

  /// Center-line count at `width`, scaled from 31 lines (4x) and 15 lines
  /// (8x) at width 256.
  static std::size_t default_center_lines(std::size_t width, double accel) {
    if (accel <= 1.0) return 0;
    double at256;
    if (accel == 4.0) at256 = 31.0;
    else if (accel == 8.0) at256 = 15.0;
    else at256 = 256.0 / accel / 2.0;
    return static_cast<std::size_t>(std::lround(at256 * static_cast<double>(width) / 256.0));
  }

  std::size_t sampled_columns() const {
    return static_cast<std::size_t>(std::lround(static_cast<double>(width) / accel));
  }

  void validate() const {
    if (width == 0 || height == 0) throw std::invalid_argument("MaskSpec: empty mask");
    if (!(accel >= 1.0)) throw std::invalid_argument("MaskSpec: accel must be >= 1");
    if (sampled_columns() == 0) throw std::invalid_argument("MaskSpec: no columns would be sampled");
    if (accel > 1.0 && !(static_cast<double>(center_lines) < static_cast<double>(width) / accel))
      throw std::invalid_argument("MaskSpec: center_lines (" + std::to_string(center_lines) +
                                  ") must be < width/accel");
    if (center_lines > sampled_columns()) throw std::invalid_argument("MaskSpec: center block exceeds sampled columns");
  }

  friend bool operator==(const MaskSpec&, const MaskSpec&) = default;
};

/// First column of the fully sampled center block.
inline std::size_t center_start(std::size_t width, std::size_t center_lines) {
  return width / 2 - center_lines / 2;
}

/// round(width/accel) sampled columns: a contiguous center block of
/// `center_lines` plus uniformly drawn columns elsewhere, without replacement.
inline SamplingMask gen_mask(const MaskSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t w = spec.width;
  const std::size_t total = spec.sampled_columns();
  std::vector<std::uint8_t> cols(w, 0);
  const std::size_t c0 = center_start(w, spec.center_lines);
  for (std::size_t j = c0; j < c0 + spec.center_lines; ++j) cols[j] = 1;
  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < w; ++j)
    if (!cols[j]) pool.push_back(j);
  // Partial Fisher-Yates: the first `need` entries are a uniform draw.
  const std::size_t need = total - spec.center_lines;
  for (std::size_t i = 0; i < need; ++i) {
    std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
    cols[pool[i]] = 1;
  }
  return SamplingMask::from_columns(spec.height, cols, spec.accel, spec.center_lines);
}

inline SamplingMask gen_mask(const MaskSpec& spec) {
  Rng rng(spec.seed);
  return gen_mask(spec, rng);
}

/// Gaussian coil profiles centered at equally spaced points on the image
/// border, each with a gentle linear phase ramp, normalized to sum_c |S_c|^2 = 1.
inline CoilSensitivities gen_smaps(std::size_t n_coils, std::size_t h, std::size_t w) {
  if (n_coils == 0) throw std::invalid_argument("gen_smaps: need at least one coil");
  CoilStack raw(n_coils, h, w);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double sigma = 0.6 * static_cast<double>(std::max(h, w));
  for (std::size_t c = 0; c < n_coils; ++c) {
    const double theta = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(n_coils);
    const double dx = std::cos(theta), dy = std::sin(theta);
    double t = std::numeric_limits<double>::infinity();
    if (std::abs(dx) > 1e-12) t = std::min(t, (cx + 0.5) / std::abs(dx));
    if (std::abs(dy) > 1e-12) t = std::min(t, (cy + 0.5) / std::abs(dy));
    const double px = cx + t * dx, py = cy + t * dy;
    const double ramp = M_PI * (0.5 + static_cast<double>(c) / static_cast<double>(n_coils));
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double x = static_cast<double>(j), y = static_cast<double>(i);
        const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
        const double mag = std::exp(-d2 / (2.0 * sigma * sigma));
        const double phase = ramp * ((x - cx) * dx + (y - cy) * dy) / static_cast<double>(std::max(h, w));
        raw[c](i, j) = std::polar(mag, phase);
      }
  }
  return CoilSensitivities::normalized(std::move(raw));
}

struct PhantomSpec {
  std::size_t size = 64;
  std::size_t n_clusters = 8;
  std::size_t per_cluster = 25;
  std::size_t n_coils = 4;
  double jitter = 0.05;
  /// Extra held-out members, assigned to clusters round-robin and stored
  /// after the training samples.
  std::size_t n_test = 0;

  std::size_t n_train() const { return n_clusters * per_cluster; }
  std::size_t n_total() const { return n_train() + n_test; }

  void validate() const {
    if (size < 8) throw std::invalid_argument("PhantomSpec: size must be >= 8");
    if (n_clusters == 0) throw std::invalid_argument("PhantomSpec: n_clusters must be positive");
    if (per_cluster < 2) throw std::invalid_argument("PhantomSpec: per_cluster must be >= 2");
    if (n_coils == 0) throw std::invalid_argument("PhantomSpec: n_coils must be positive");
    if (!(jitter >= 0.0)) throw std::invalid_argument("PhantomSpec: jitter must be >= 0");
  }

  friend bool operator==(const PhantomSpec&, const PhantomSpec&) = default;
};

struct Ellipse {
  double cx, cy, ax, ay, angle;
  cplx amplitude;
};

struct ClusterProto {
  std::vector<Ellipse> ellipses;
  double phase[4];  // constant, x, y, radial^2 coefficients
};

inline ClusterProto make_cluster(Rng& rng) {
  ClusterProto p;
  const std::size_t n = 5 + rng.index(6);
  // A large body ellipse keeps every phantom anatomically "filled".
  p.ellipses.push_back({rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(0.6, 0.85),
                        rng.uniform(0.6, 0.85), rng.uniform(0.0, M_PI),
                        std::polar(rng.uniform(0.5, 1.0), rng.uniform(-0.3, 0.3))});
  for (std::size_t e = 1; e < n; ++e)
    p.ellipses.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.05, 0.35),
                          rng.uniform(0.05, 0.35), rng.uniform(0.0, M_PI),
                          std::polar(rng.uniform(0.2, 0.8), rng.uniform(-M_PI, M_PI))});
  p.phase[0] = rng.uniform(-M_PI, M_PI);
  p.phase[1] = rng.uniform(-1.0, 1.0);
  p.phase[2] = rng.uniform(-1.0, 1.0);
  p.phase[3] = rng.uniform(-0.5, 0.5);
  return p;
}

/// Member of a cluster: every ellipse parameter perturbed by `jitter`
/// (relative scale; centers relative to the half field of view).
inline ClusterProto jitter_cluster(const ClusterProto& proto, double jitter, Rng& rng) {
  ClusterProto m = proto;
  for (auto& e : m.ellipses) {
    e.cx += jitter * rng.normal();
    e.cy += jitter * rng.normal();
    e.ax *= std::max(0.2, 1.0 + jitter * rng.normal());
    e.ay *= std::max(0.2, 1.0 + jitter * rng.normal());
    e.angle += jitter * M_PI * rng.normal();
    e.amplitude *= std::polar(std::max(0.2, 1.0 + jitter * rng.normal()), jitter * M_PI * rng.normal());
  }
  for (double& c : m.phase) c += jitter * rng.normal();
  return m;
}

/// Renders onto a size x size grid spanning [-1, 1]^2, with 2x2 supersampling
/// at every pixel, then scales to max magnitude 1.
inline ComplexImage render_phantom(const ClusterProto& p, std::size_t size) {
  ComplexImage img(size, size);
  const double step = 2.0 / static_cast<double>(size);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j) {
      cplx acc{0.0, 0.0};
      for (int si = 0; si < 2; ++si)
        for (int sj = 0; sj < 2; ++sj) {
          const double y = -1.0 + (static_cast<double>(i) + 0.25 + 0.5 * si) * step;
          const double x = -1.0 + (static_cast<double>(j) + 0.25 + 0.5 * sj) * step;
          cplx v{0.0, 0.0};
          for (const auto& e : p.ellipses) {
            const double ct = std::cos(e.angle), st = std::sin(e.angle);
            const double u = ((x - e.cx) * ct + (y - e.cy) * st) / e.ax;
            const double t = (-(x - e.cx) * st + (y - e.cy) * ct) / e.ay;
            if (u * u + t * t <= 1.0) v += e.amplitude;
          }
          acc += v;
        }
      const double yc = -1.0 + (static_cast<double>(i) + 0.5) * step;
      const double xc = -1.0 + (static_cast<double>(j) + 0.5) * step;
      const double phi = p.phase[0] + p.phase[1] * xc + p.phase[2] * yc + p.phase[3] * (xc * xc + yc * yc);
      img(i, j) = 0.25 * acc * std::polar(1.0, phi);
    }
  double peak = 0.0;
  for (const auto& z : img.data()) peak = std::max(peak, std::abs(z));
  if (peak > 0.0) img *= 1.0 / peak;
  return img;
}

struct Sample {
  ComplexImage gt;
  CoilSensitivities smaps;
  std::size_t cluster = 0;
};

struct Dataset {
  PhantomSpec spec;
  std::vector<Sample> samples;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  std::vector<ComplexImage> train_images() const {
    std::vector<ComplexImage> out;
    for (auto i : train) out.push_back(samples[i].gt);
    return out;
  }
};

/// Cluster prototypes are drawn from rng.split(2^32 + c) and member jitter
/// from rng.split(sample index), so any sample can be regenerated alone.
inline Dataset gen_dataset(const PhantomSpec& spec, const Rng& rng) {
  spec.validate();
  std::vector<ClusterProto> protos;
  for (std::size_t c = 0; c < spec.n_clusters; ++c) {
    Rng r = rng.split((std::uint64_t{1} << 32) + c);
    protos.push_back(make_cluster(r));
  }
  const CoilSensitivities smaps = gen_smaps(spec.n_coils, spec.size, spec.size);
  Dataset ds;
  ds.spec = spec;
  for (std::size_t s = 0; s < spec.n_total(); ++s) {
    const std::size_t cluster = s < spec.n_train() ? s / spec.per_cluster : (s - spec.n_train()) % spec.n_clusters;
    Rng r = rng.split(s);
    const ClusterProto member = jitter_cluster(protos[cluster], spec.jitter, r);
    ds.samples.push_back({render_phantom(member, spec.size), smaps, cluster});
    (s < spec.n_train() ? ds.train : ds.test).push_back(s);
  }
  return ds;
}

}  // namespace londn
