// Centered, orthonormal 2D FFT backed by FFTW.
//
// fft2c(x) = fftshift(DFT(ifftshift(x))) / sqrt(H*W); ifft2c is its exact
// inverse. Plans are cached per (shape, direction) and executed through the
// new-array interface, which FFTW guarantees is thread-safe.
#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "londn/image.hpp"

namespace londn {

namespace detail {

class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan get(std::size_t h, std::size_t w, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_tuple(h, w, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> a(h * w), b(h * w);
    fftw_plan p = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w),
                                   reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

 private:
  FftPlans() = default;
  ~FftPlans() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

  std::mutex mu_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

/// Circular shift by (sh, sw): out(i, j) = in(i - sh mod H, j - sw mod W).
inline void roll(std::span<const cplx> in, std::span<cplx> out, std::size_t h, std::size_t w,
                 std::size_t sh, std::size_t sw) {
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t oi = (i + sh) % h;
    const cplx* src = in.data() + i * w;
    cplx* dst = out.data() + oi * w;
    for (std::size_t j = 0; j < w; ++j) dst[(j + sw) % w] = src[j];
  }
}

inline void fftshift(std::span<const cplx> in, std::span<cplx> out, std::size_t h, std::size_t w) {
  roll(in, out, h, w, h / 2, w / 2);
}

inline void ifftshift(std::span<const cplx> in, std::span<cplx> out, std::size_t h, std::size_t w) {
  roll(in, out, h, w, (h + 1) / 2, (w + 1) / 2);
}

/// Raw unnormalized transform of an uncentered buffer, scaled by 1/sqrt(q).
inline void dft_scaled(std::span<const cplx> in, std::span<cplx> out, std::size_t h, std::size_t w,
                       int sign) {
  fftw_plan p = FftPlans::instance().get(h, w, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double s = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (auto& z : out) z *= s;
}

}  // namespace detail

inline ComplexImage fftshift(const ComplexImage& x) {
  ComplexImage out(x.height(), x.width());
  detail::fftshift(x.data(), out.data(), x.height(), x.width());
  return out;
}

inline ComplexImage ifftshift(const ComplexImage& x) {
  ComplexImage out(x.height(), x.width());
  detail::ifftshift(x.data(), out.data(), x.height(), x.width());
  return out;
}

inline ComplexImage fft2c(const ComplexImage& x) {
  const std::size_t h = x.height(), w = x.width();
  ComplexImage a(h, w), b(h, w);
  detail::ifftshift(x.data(), a.data(), h, w);
  detail::dft_scaled(a.data(), b.data(), h, w, FFTW_FORWARD);
  detail::fftshift(b.data(), a.data(), h, w);
  return a;
}

inline ComplexImage ifft2c(const ComplexImage& k) {
  const std::size_t h = k.height(), w = k.width();
  ComplexImage a(h, w), b(h, w);
  detail::ifftshift(k.data(), a.data(), h, w);
  detail::dft_scaled(a.data(), b.data(), h, w, FFTW_BACKWARD);
  detail::fftshift(b.data(), a.data(), h, w);
  return a;
}

}  // namespace londn
