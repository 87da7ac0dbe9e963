// Core array types shared by every module: complex image planes, coil
// stacks, Cartesian sampling masks and a seeded random source.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace londn {

using cplx = std::complex<double>;

class ComplexImage {
 public:
  ComplexImage() = default;
  ComplexImage(std::size_t height, std::size_t width)
      : height_(height), width_(width), data_(height * width) {
    if (height == 0 || width == 0)
      throw std::invalid_argument("ComplexImage: dimensions must be positive");
  }
  ComplexImage(std::size_t height, std::size_t width, std::vector<cplx> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (height == 0 || width == 0)
      throw std::invalid_argument("ComplexImage: dimensions must be positive");
    if (data_.size() != height * width)
      throw std::invalid_argument("ComplexImage: data length " + std::to_string(data_.size()) +
                                  " does not match " + std::to_string(height) + "x" +
                                  std::to_string(width));
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * width_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * width_ + j]; }
  cplx& operator[](std::size_t k) { return data_[k]; }
  const cplx& operator[](std::size_t k) const { return data_[k]; }

  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }
  std::vector<cplx>& storage() { return data_; }
  const std::vector<cplx>& storage() const { return data_; }

  bool same_shape(const ComplexImage& o) const { return height_ == o.height_ && width_ == o.width_; }

  bool all_finite() const {
    for (const auto& z : data_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

  ComplexImage& operator+=(const ComplexImage& o) {
    require_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  ComplexImage& operator-=(const ComplexImage& o) {
    require_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  ComplexImage& operator*=(cplx s) {
    for (auto& z : data_) z *= s;
    return *this;
  }
  ComplexImage& operator*=(double s) {
    for (auto& z : data_) z *= s;
    return *this;
  }

  friend ComplexImage operator+(ComplexImage a, const ComplexImage& b) { return a += b; }
  friend ComplexImage operator-(ComplexImage a, const ComplexImage& b) { return a -= b; }
  friend ComplexImage operator*(ComplexImage a, cplx s) { return a *= s; }
  friend ComplexImage operator*(cplx s, ComplexImage a) { return a *= s; }
  friend ComplexImage operator*(ComplexImage a, double s) { return a *= s; }
  friend ComplexImage operator*(double s, ComplexImage a) { return a *= s; }
  friend bool operator==(const ComplexImage&, const ComplexImage&) = default;

  void require_same(const ComplexImage& o) const {
    if (!same_shape(o))
      throw std::invalid_argument("dimension mismatch: " + std::to_string(height_) + "x" +
                                  std::to_string(width_) + " vs " + std::to_string(o.height_) +
                                  "x" + std::to_string(o.width_));
  }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<cplx> data_;
};

/// Complex inner product <a, b> = sum conj(a_i) b_i.
inline cplx inner(const ComplexImage& a, const ComplexImage& b) {
  a.require_same(b);
  cplx acc{0.0, 0.0};
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::conj(a[k]) * b[k];
  return acc;
}

inline double norm_sq(const ComplexImage& a) {
  double acc = 0.0;
  for (const auto& z : a.data()) acc += std::norm(z);
  return acc;
}

inline double norm2(const ComplexImage& a) { return std::sqrt(norm_sq(a)); }

inline ComplexImage magnitude(const ComplexImage& a) {
  ComplexImage out(a.height(), a.width());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = std::abs(a[k]);
  return out;
}

/// Per-coil stack of planes sharing one shape. Used both for k-space
/// measurements and for coil sensitivity maps.
class CoilStack {
 public:
  CoilStack() = default;
  CoilStack(std::size_t ncoils, std::size_t height, std::size_t width)
      : planes_(ncoils, ComplexImage(height, width)) {
    if (ncoils == 0) throw std::invalid_argument("CoilStack: ncoils must be positive");
  }
  explicit CoilStack(std::vector<ComplexImage> planes) : planes_(std::move(planes)) {
    if (planes_.empty()) throw std::invalid_argument("CoilStack: ncoils must be positive");
    for (const auto& p : planes_) planes_.front().require_same(p);
  }

  std::size_t ncoils() const { return planes_.size(); }
  std::size_t height() const { return planes_.empty() ? 0 : planes_.front().height(); }
  std::size_t width() const { return planes_.empty() ? 0 : planes_.front().width(); }

  ComplexImage& operator[](std::size_t c) { return planes_[c]; }
  const ComplexImage& operator[](std::size_t c) const { return planes_[c]; }
  auto begin() { return planes_.begin(); }
  auto end() { return planes_.end(); }
  auto begin() const { return planes_.begin(); }
  auto end() const { return planes_.end(); }

  friend bool operator==(const CoilStack&, const CoilStack&) = default;

 private:
  std::vector<ComplexImage> planes_;
};

using MultiCoilKSpace = CoilStack;

inline cplx inner(const CoilStack& a, const CoilStack& b) {
  if (a.ncoils() != b.ncoils()) throw std::invalid_argument("coil count mismatch");
  cplx acc{0.0, 0.0};
  for (std::size_t c = 0; c < a.ncoils(); ++c) acc += inner(a[c], b[c]);
  return acc;
}

/// Coil sensitivities S_c with sum_c |S_c|^2 == 1 at every pixel.
class CoilSensitivities {
 public:
  CoilSensitivities() = default;

  /// Takes raw maps and rescales each pixel so the coil magnitudes sum in
  /// quadrature to one. Pixels where every coil is zero get S_0 = 1.
  static CoilSensitivities normalized(CoilStack raw) {
    const std::size_t n = raw[0].size();
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (const auto& p : raw) s += std::norm(p[k]);
      if (s > 0.0) {
        const double inv = 1.0 / std::sqrt(s);
        for (auto& p : raw) p[k] *= inv;
      } else {
        raw[0][k] = 1.0;
      }
    }
    CoilSensitivities out;
    out.maps_ = std::move(raw);
    return out;
  }

  /// Wraps maps that are already normalized; checks the invariant.
  static CoilSensitivities from_maps(CoilStack maps, double tol = 1e-6) {
    const std::size_t n = maps[0].size();
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (const auto& p : maps) s += std::norm(p[k]);
      if (std::abs(s - 1.0) > tol)
        throw std::invalid_argument("coil sensitivities not normalized at pixel " +
                                    std::to_string(k));
    }
    CoilSensitivities out;
    out.maps_ = std::move(maps);
    return out;
  }

  /// A single coil with S = 1 everywhere.
  static CoilSensitivities unit(std::size_t height, std::size_t width) {
    CoilStack maps(1, height, width);
    for (auto& z : maps[0].data()) z = 1.0;
    CoilSensitivities out;
    out.maps_ = std::move(maps);
    return out;
  }

  std::size_t ncoils() const { return maps_.ncoils(); }
  std::size_t height() const { return maps_.height(); }
  std::size_t width() const { return maps_.width(); }
  const ComplexImage& operator[](std::size_t c) const { return maps_[c]; }
  const CoilStack& maps() const { return maps_; }

 private:
  CoilStack maps_;
};

/// Binary k-space mask. Phase-encode lines are columns: every column is
/// either fully sampled or fully skipped.
class SamplingMask {
 public:
  SamplingMask() = default;

  static SamplingMask from_columns(std::size_t height, const std::vector<std::uint8_t>& columns,
                                   double accel, std::size_t center_lines) {
    SamplingMask m;
    m.height_ = height;
    m.width_ = columns.size();
    m.accel_ = accel;
    m.center_lines_ = center_lines;
    m.grid_.resize(height * columns.size());
    for (std::size_t i = 0; i < height; ++i)
      for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] > 1) throw std::invalid_argument("mask values must be 0 or 1");
        m.grid_[i * m.width_ + j] = columns[j];
      }
    m.validate();
    return m;
  }

  static SamplingMask from_grid(std::size_t height, std::size_t width,
                                std::vector<std::uint8_t> grid, double accel,
                                std::size_t center_lines) {
    SamplingMask m;
    m.height_ = height;
    m.width_ = width;
    m.accel_ = accel;
    m.center_lines_ = center_lines;
    m.grid_ = std::move(grid);
    m.validate();
    return m;
  }

  static SamplingMask full(std::size_t height, std::size_t width) {
    return from_columns(height, std::vector<std::uint8_t>(width, 1), 1.0, 0);
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  double accel() const { return accel_; }
  std::size_t center_lines() const { return center_lines_; }
  std::uint8_t operator()(std::size_t i, std::size_t j) const { return grid_[i * width_ + j]; }
  std::uint8_t operator[](std::size_t k) const { return grid_[k]; }
  const std::vector<std::uint8_t>& grid() const { return grid_; }

  std::vector<std::uint8_t> columns() const {
    return {grid_.begin(), grid_.begin() + static_cast<std::ptrdiff_t>(width_)};
  }
  std::size_t sampled_columns() const {
    std::size_t n = 0;
    for (std::size_t j = 0; j < width_; ++j) n += grid_[j];
    return n;
  }

  friend bool operator==(const SamplingMask&, const SamplingMask&) = default;

 private:
  void validate() const {
    if (height_ == 0 || width_ == 0) throw std::invalid_argument("mask dimensions must be positive");
    if (grid_.size() != height_ * width_) throw std::invalid_argument("mask grid size mismatch");
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      if (grid_[k] > 1) throw std::invalid_argument("mask values must be 0 or 1");
      if (grid_[k] != grid_[k % width_])
        throw std::invalid_argument("mask column " + std::to_string(k % width_) +
                                    " is not constant along rows");
    }
    if (sampled_columns() < center_lines_)
      throw std::invalid_argument("mask samples fewer columns than center_lines");
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  double accel_ = 1.0;
  std::size_t center_lines_ = 0;
  std::vector<std::uint8_t> grid_;
};

/// Seeded random source. Child streams derived with `split` depend only on
/// (seed, index), so per-sample generation is independent of worker count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }
  Rng split(std::uint64_t index) const { return Rng(mix(seed_ ^ mix(index + 0x9e3779b97f4a7c15ULL))); }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }
  /// Standard normal via Box-Muller; stateless between calls so the sequence
  /// is a function of the engine alone.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  cplx complex_normal() { return {normal(), normal()}; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

inline ComplexImage random_image(std::size_t h, std::size_t w, Rng& rng) {
  ComplexImage img(h, w);
  for (auto& z : img.data()) z = rng.complex_normal();
  return img;
}

}  // namespace londn
