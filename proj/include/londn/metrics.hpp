// PSNR, SSIM and HFEN on magnitude images. Peak and data range come from the
// ground truth so scores are comparable across methods on the same scan.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "londn/image.hpp"

namespace londn {

struct MetricReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double hfen = 0.0;
};

inline constexpr double kPsnrCap = 100.0;

namespace detail {

struct RealImage {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
  double operator()(std::size_t i, std::size_t j) const { return v[i * w + j]; }
};

inline RealImage abs_image(const ComplexImage& x) {
  RealImage r{x.height(), x.width(), std::vector<double>(x.size())};
  for (std::size_t k = 0; k < x.size(); ++k) r.v[k] = std::abs(x[k]);
  return r;
}

inline std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> g(size * size);
  const double c = (static_cast<double>(size) - 1.0) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j) {
      const double y = static_cast<double>(i) - c, x = static_cast<double>(j) - c;
      g[i * size + j] = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
      sum += g[i * size + j];
    }
  for (auto& v : g) v /= sum;
  return g;
}

inline std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  // Half-sample symmetric extension: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<std::ptrdiff_t>(n) ? i : period - 1 - i);
}

}  // namespace detail

inline double psnr(const ComplexImage& recon, const ComplexImage& gt) {
  recon.require_same(gt);
  double peak = 0.0, se = 0.0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    const double a = std::abs(gt[k]);
    peak = std::max(peak, a);
    const double d = std::abs(recon[k]) - a;
    se += d * d;
  }
  if (peak == 0.0) throw std::invalid_argument("psnr: ground truth is zero");
  const double rmse = std::sqrt(se / static_cast<double>(gt.size()));
  if (rmse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 20.0 * std::log10(peak / rmse));
}

/// Mean SSIM over the valid region of an 11x11, sigma 1.5 Gaussian window
/// (K1 = 0.01, K2 = 0.03). Data range is max|gt| - min|gt|.
inline double ssim(const ComplexImage& recon, const ComplexImage& gt) {
  constexpr std::size_t win = 11;
  recon.require_same(gt);
  if (gt.height() < win || gt.width() < win) throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  const auto x = detail::abs_image(recon);
  const auto y = detail::abs_image(gt);
  const auto [mn, mx] = std::minmax_element(y.v.begin(), y.v.end());
  const double range = *mx - *mn;
  if (!(range > 0.0)) throw std::invalid_argument("ssim: ground truth has zero data range");
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const auto g = detail::gaussian_window(win, 1.5);
  const std::size_t oh = gt.height() - win + 1, ow = gt.width() - win + 1;
  double total = 0.0;
  for (std::size_t i = 0; i < oh; ++i)
    for (std::size_t j = 0; j < ow; ++j) {
      double mx_ = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t a = 0; a < win; ++a)
        for (std::size_t b = 0; b < win; ++b) {
          const double wgt = g[a * win + b];
          const double xv = x(i + a, j + b), yv = y(i + a, j + b);
          mx_ += wgt * xv;
          my += wgt * yv;
          sxx += wgt * xv * xv;
          syy += wgt * yv * yv;
          sxy += wgt * xv * yv;
        }
      const double vx = sxx - mx_ * mx_, vy = syy - my * my, cxy = sxy - mx_ * my;
      total += ((2.0 * mx_ * my + c1) * (2.0 * cxy + c2)) /
               ((mx_ * mx_ + my * my + c1) * (vx + vy + c2));
    }
  return total / static_cast<double>(oh * ow);
}

/// 15x15 Laplacian-of-Gaussian kernel, sigma 1.5, shifted to sum to zero.
inline std::vector<double> log_kernel(std::size_t size = 15, double sigma = 1.5) {
  std::vector<double> k(size * size);
  const double c = (static_cast<double>(size) - 1.0) / 2.0;
  const double s2 = sigma * sigma;
  double gsum = 0.0;
  std::vector<double> g(size * size);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j) {
      const double y = static_cast<double>(i) - c, x = static_cast<double>(j) - c;
      g[i * size + j] = std::exp(-(x * x + y * y) / (2.0 * s2));
      gsum += g[i * size + j];
    }
  double ksum = 0.0;
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j) {
      const double y = static_cast<double>(i) - c, x = static_cast<double>(j) - c;
      k[i * size + j] = g[i * size + j] * (x * x + y * y - 2.0 * s2) / (s2 * s2 * gsum);
      ksum += k[i * size + j];
    }
  const double mean = ksum / static_cast<double>(size * size);
  for (auto& v : k) v -= mean;
  return k;
}

/// LoG filtering with symmetric boundary extension (same-size output).
inline std::vector<double> log_filter(const ComplexImage& img, const std::vector<double>& kernel,
                                      std::size_t ksize) {
  const auto x = detail::abs_image(img);
  const auto half = static_cast<std::ptrdiff_t>(ksize / 2);
  std::vector<double> out(x.v.size(), 0.0);
  for (std::size_t i = 0; i < x.h; ++i)
    for (std::size_t j = 0; j < x.w; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < ksize; ++a) {
        const std::size_t si = detail::reflect(static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(a) - half, x.h);
        for (std::size_t b = 0; b < ksize; ++b) {
          const std::size_t sj = detail::reflect(static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(b) - half, x.w);
          acc += kernel[a * ksize + b] * x(si, sj);
        }
      }
      out[i * x.w + j] = acc;
    }
  return out;
}

inline double hfen(const ComplexImage& recon, const ComplexImage& gt) {
  constexpr std::size_t ksize = 15;
  recon.require_same(gt);
  if (gt.height() < ksize || gt.width() < ksize) throw std::invalid_argument("hfen: image smaller than the LoG kernel");
  const auto kern = log_kernel(ksize, 1.5);
  const auto fr = log_filter(recon, kern, ksize);
  const auto fg = log_filter(gt, kern, ksize);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < fr.size(); ++k) {
    num += (fr[k] - fg[k]) * (fr[k] - fg[k]);
    den += fg[k] * fg[k];
  }
  if (den == 0.0) throw std::invalid_argument("hfen: LoG of the ground truth is zero");
  return std::sqrt(num / den);
}

inline MetricReport evaluate(const ComplexImage& recon, const ComplexImage& gt) {
  return {psnr(recon, gt), ssim(recon, gt), hfen(recon, gt)};
}

}  // namespace londn
