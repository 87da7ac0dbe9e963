// Residual CNN denoiser on the 2-channel (re, im) view of a complex image,
// with hand-written reverse mode.
//
// Layers: conv(2 -> F) ReLU, [conv(F -> F) ReLU] x (n_layers - 2), conv(F -> 2).
// All convolutions are "same" cross-correlations with zero padding.
// Residual mode returns x - net(x).
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "londn/image.hpp"
#include "londn/tensor.hpp"

namespace londn {

struct DenoiserConfig {
  std::size_t n_layers = 4;
  std::size_t features = 32;
  std::size_t kernel = 3;
  bool residual = true;

  void validate() const {
    if (n_layers < 2) throw std::invalid_argument("DenoiserConfig: n_layers must be >= 2");
    if (kernel % 2 == 0) throw std::invalid_argument("DenoiserConfig: kernel must be odd");
    if (features == 0) throw std::invalid_argument("DenoiserConfig: features must be positive");
  }
  std::size_t in_channels(std::size_t layer) const { return layer == 0 ? 2 : features; }
  std::size_t out_channels(std::size_t layer) const { return layer + 1 == n_layers ? 2 : features; }

  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

using DenoiserParams = ParamSet;

/// Zero-initialized parameters with the layout implied by `cfg`:
/// tensors "layer<i>.weight" (out x in x k x k) then "layer<i>.bias" (out).
inline DenoiserParams zero_params(const DenoiserConfig& cfg) {
  cfg.validate();
  std::vector<Tensor> ts;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::size_t co = cfg.out_channels(l), ci = cfg.in_channels(l), k = cfg.kernel;
    ts.push_back({"layer" + std::to_string(l) + ".weight", {co, ci, k, k},
                  std::vector<double>(co * ci * k * k, 0.0)});
    ts.push_back({"layer" + std::to_string(l) + ".bias", {co}, std::vector<double>(co, 0.0)});
  }
  return DenoiserParams(std::move(ts));
}

/// He-normal weights, zero biases. The output layer is scaled by
/// `last_layer_scale` so a fresh residual network starts near identity.
inline DenoiserParams init_params(const DenoiserConfig& cfg, Rng& rng, double last_layer_scale = 0.1) {
  DenoiserParams p = zero_params(cfg);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    Tensor& w = p[2 * l];
    const double fan_in = static_cast<double>(w.shape[1] * w.shape[2] * w.shape[3]);
    double sd = std::sqrt(2.0 / fan_in);
    if (l + 1 == cfg.n_layers) sd *= last_layer_scale;
    for (auto& v : w.values) v = sd * rng.normal();
  }
  return p;
}

inline void check_params(const DenoiserParams& params, const DenoiserConfig& cfg) {
  if (!params.same_layout(zero_params(cfg)))
    throw std::invalid_argument("denoiser parameters do not match configuration");
  if (!params.all_finite()) throw std::invalid_argument("denoiser parameters contain non-finite values");
}

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Output columns j with 0 <= j + offset < w.
inline std::pair<std::ptrdiff_t, std::ptrdiff_t> valid_range(std::size_t w, std::ptrdiff_t offset) {
  const auto sw = static_cast<std::ptrdiff_t>(w);
  return {std::clamp<std::ptrdiff_t>(-offset, 0, sw), std::clamp<std::ptrdiff_t>(sw - offset, 0, sw)};
}

/// (C x HW) activations -> (C*k*k x HW) patch matrix, zero padded.
inline void im2col(const RowMat& x, std::size_t h, std::size_t w, std::size_t k, RowMat& col) {
  const std::size_t c = static_cast<std::size_t>(x.rows());
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  col.resize(static_cast<Eigen::Index>(c * k * k), static_cast<Eigen::Index>(h * w));
  for (std::size_t ci = 0; ci < c; ++ci) {
    const double* src = x.data() + ci * h * w;
    for (std::size_t di = 0; di < k; ++di)
      for (std::size_t dj = 0; dj < k; ++dj) {
        double* dst = col.data() + ((ci * k + di) * k + dj) * h * w;
        const std::ptrdiff_t oi = static_cast<std::ptrdiff_t>(di) - pad;
        const std::ptrdiff_t oj = static_cast<std::ptrdiff_t>(dj) - pad;
        for (std::size_t i = 0; i < h; ++i) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i) + oi;
          double* row = dst + i * w;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(row, row + w, 0.0);
            continue;
          }
          const double* srow = src + static_cast<std::size_t>(si) * w;
          const auto [j0, j1] = valid_range(w, oj);
          std::fill(row, row + j0, 0.0);
          std::copy(srow + j0 + oj, srow + j1 + oj, row + j0);
          std::fill(row + j1, row + w, 0.0);
        }
      }
  }
}

/// Adjoint of im2col: scatter-add patch gradients back to (C x HW).
inline void col2im(const RowMat& col, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
                   RowMat& x) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  x.setZero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(h * w));
  for (std::size_t ci = 0; ci < c; ++ci) {
    double* dst = x.data() + ci * h * w;
    for (std::size_t di = 0; di < k; ++di)
      for (std::size_t dj = 0; dj < k; ++dj) {
        const double* src = col.data() + ((ci * k + di) * k + dj) * h * w;
        const std::ptrdiff_t oi = static_cast<std::ptrdiff_t>(di) - pad;
        const std::ptrdiff_t oj = static_cast<std::ptrdiff_t>(dj) - pad;
        for (std::size_t i = 0; i < h; ++i) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i) + oi;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
          const double* row = src + i * w;
          double* drow = dst + static_cast<std::size_t>(si) * w;
          const auto [j0, j1] = valid_range(w, oj);
          for (std::ptrdiff_t j = j0; j < j1; ++j) drow[j + oj] += row[j];
        }
      }
  }
}

inline RowMat to_channels(const ComplexImage& img) {
  RowMat x(2, static_cast<Eigen::Index>(img.size()));
  for (std::size_t k = 0; k < img.size(); ++k) {
    x(0, static_cast<Eigen::Index>(k)) = img[k].real();
    x(1, static_cast<Eigen::Index>(k)) = img[k].imag();
  }
  return x;
}

inline ComplexImage from_channels(const RowMat& x, std::size_t h, std::size_t w) {
  ComplexImage img(h, w);
  for (std::size_t k = 0; k < img.size(); ++k)
    img[k] = {x(0, static_cast<Eigen::Index>(k)), x(1, static_cast<Eigen::Index>(k))};
  return img;
}

inline Eigen::Map<const RowMat> weight_map(const Tensor& t) {
  return {t.values.data(), static_cast<Eigen::Index>(t.shape[0]),
          static_cast<Eigen::Index>(t.shape[1] * t.shape[2] * t.shape[3])};
}

}  // namespace detail

/// Activations retained by a forward pass: the input of every layer.
struct DenoiserTape {
  std::size_t height = 0, width = 0;
  std::vector<detail::RowMat> inputs;
};

inline ComplexImage denoise(const DenoiserParams& params, const DenoiserConfig& cfg,
                            const ComplexImage& img, DenoiserTape* tape = nullptr) {
  check_params(params, cfg);
  using detail::RowMat;
  const std::size_t h = img.height(), w = img.width();
  RowMat act = detail::to_channels(img);
  RowMat col, out;
  if (tape) {
    tape->height = h;
    tape->width = w;
    tape->inputs.clear();
  }
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    detail::im2col(act, h, w, cfg.kernel, col);
    const auto W = detail::weight_map(params[2 * l]);
    const auto& b = params[2 * l + 1].values;
    out.noalias() = W * col;
    for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r).array() += b[static_cast<std::size_t>(r)];
    if (l + 1 < cfg.n_layers) out = out.cwiseMax(0.0);
    if (tape) tape->inputs.push_back(std::move(act));
    act.swap(out);
  }
  ComplexImage net = detail::from_channels(act, h, w);
  if (!cfg.residual) return net;
  return img - net;
}

/// Accumulates d<cot, denoise(x)>/dtheta into `grad` and returns the input
/// gradient (empty image when `need_input_grad` is false).
inline ComplexImage denoise_backward(const DenoiserParams& params, const DenoiserConfig& cfg,
                                     const DenoiserTape& tape, const ComplexImage& cotangent,
                                     DenoiserParams& grad, bool need_input_grad = true) {
  using detail::RowMat;
  const std::size_t h = tape.height, w = tape.width;
  if (cotangent.height() != h || cotangent.width() != w)
    throw std::invalid_argument("denoise_vjp: cotangent shape does not match input");
  if (tape.inputs.size() != cfg.n_layers) throw std::invalid_argument("denoise_vjp: tape is incomplete");
  grad.require_layout(params);

  RowMat delta = detail::to_channels(cotangent);
  if (cfg.residual) delta = -delta;
  RowMat col, dcol, dx;
  for (std::size_t li = cfg.n_layers; li-- > 0;) {
    const RowMat& in = tape.inputs[li];
    detail::im2col(in, h, w, cfg.kernel, col);
    Tensor& gw = grad[2 * li];
    Eigen::Map<RowMat> GW(gw.values.data(), static_cast<Eigen::Index>(gw.shape[0]),
                          static_cast<Eigen::Index>(gw.shape[1] * gw.shape[2] * gw.shape[3]));
    GW.noalias() += delta * col.transpose();
    auto& gb = grad[2 * li + 1].values;
    for (Eigen::Index r = 0; r < delta.rows(); ++r) gb[static_cast<std::size_t>(r)] += delta.row(r).sum();
    if (li == 0 && !need_input_grad) break;
    const auto W = detail::weight_map(params[2 * li]);
    dcol.noalias() = W.transpose() * delta;
    detail::col2im(dcol, cfg.in_channels(li), h, w, cfg.kernel, dx);
    if (li > 0) {
      delta = (in.array() > 0.0).select(dx.array(), 0.0).matrix();
    } else {
      delta.swap(dx);
    }
  }
  if (!need_input_grad) return {};
  ComplexImage gin = detail::from_channels(delta, h, w);
  if (cfg.residual) gin += cotangent;
  return gin;
}

struct DenoiseVjp {
  DenoiserParams grad_params;
  ComplexImage grad_input;
};

/// Gradients of the real inner product <cotangent, denoise(img)> over the
/// 2-channel view, with respect to the parameters and the input image.
inline DenoiseVjp denoise_vjp(const DenoiserParams& params, const DenoiserConfig& cfg,
                              const ComplexImage& img, const ComplexImage& cotangent) {
  DenoiserTape tape;
  (void)denoise(params, cfg, img, &tape);
  DenoiseVjp out{params.zeros_like(), {}};
  out.grad_input = denoise_backward(params, cfg, tape, cotangent, out.grad_params, true);
  return out;
}

}  // namespace londn
