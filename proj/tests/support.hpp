// Shared fixtures for the unit tests: random operators, temp directories and
// finite-difference helpers.
#pragma once

#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <string>

#include "londn/forward_model.hpp"
#include "londn/phantom.hpp"

namespace londn::test {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("londn_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline CoilSensitivities random_smaps(std::size_t ncoils, std::size_t h, std::size_t w, Rng& rng) {
  CoilStack raw(ncoils, h, w);
  for (auto& p : raw)
    for (auto& z : p.data()) z = rng.complex_normal();
  return CoilSensitivities::normalized(std::move(raw));
}

/// Random column mask that keeps at least one column.
inline SamplingMask random_mask(std::size_t h, std::size_t w, Rng& rng) {
  std::vector<std::uint8_t> cols(w);
  for (auto& c : cols) c = rng.uniform() < 0.5 ? 1 : 0;
  cols[rng.index(w)] = 1;
  return SamplingMask::from_columns(h, cols, 2.0, 0);
}

inline ForwardModel random_model(std::size_t ncoils, std::size_t h, std::size_t w, Rng& rng) {
  return ForwardModel(random_mask(h, w, rng), random_smaps(ncoils, h, w, rng));
}

inline MultiCoilKSpace random_kspace(std::size_t ncoils, std::size_t h, std::size_t w, Rng& rng) {
  MultiCoilKSpace y(ncoils, h, w);
  for (auto& p : y)
    for (auto& z : p.data()) z = rng.complex_normal();
  return y;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_abs_diff(const ComplexImage& a, const ComplexImage& b) {
  a.require_same(b);
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double rel_diff(const ComplexImage& a, const ComplexImage& b) {
  return norm2(a - b) / std::max(norm2(b), 1e-300);
}

}  // namespace londn::test
