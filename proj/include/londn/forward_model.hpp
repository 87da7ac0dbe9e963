// Multi-coil Cartesian measurement operator A_c = M F S_c and its adjoint.
#pragma once

#include <stdexcept>

#include "londn/fft.hpp"
#include "londn/image.hpp"

namespace londn {

struct ForwardModel {
  SamplingMask mask;
  CoilSensitivities smaps;

  ForwardModel() = default;
  ForwardModel(SamplingMask m, CoilSensitivities s) : mask(std::move(m)), smaps(std::move(s)) {
    if (mask.height() != smaps.height() || mask.width() != smaps.width())
      throw std::invalid_argument("ForwardModel: mask " + std::to_string(mask.height()) + "x" +
                                  std::to_string(mask.width()) + " does not match coil maps " +
                                  std::to_string(smaps.height()) + "x" + std::to_string(smaps.width()));
  }

  std::size_t height() const { return mask.height(); }
  std::size_t width() const { return mask.width(); }
  std::size_t ncoils() const { return smaps.ncoils(); }

  void check_image(const ComplexImage& x) const {
    if (x.height() != height() || x.width() != width())
      throw std::invalid_argument("image " + std::to_string(x.height()) + "x" +
                                  std::to_string(x.width()) + " does not match forward model " +
                                  std::to_string(height()) + "x" + std::to_string(width()));
  }
  void check_kspace(const MultiCoilKSpace& y) const {
    if (y.ncoils() != ncoils()) throw std::invalid_argument("k-space coil count mismatch");
    check_image(y[0]);
  }
};

inline MultiCoilKSpace forward(const ForwardModel& model, const ComplexImage& x) {
  model.check_image(x);
  const std::size_t h = x.height(), w = x.width(), n = x.size();
  MultiCoilKSpace out(model.ncoils(), h, w);
  ComplexImage a(h, w), b(h, w);
  for (std::size_t c = 0; c < model.ncoils(); ++c) {
    const ComplexImage& s = model.smaps[c];
    for (std::size_t k = 0; k < n; ++k) a[k] = s[k] * x[k];
    detail::ifftshift(a.data(), b.data(), h, w);
    detail::dft_scaled(b.data(), a.data(), h, w, FFTW_FORWARD);
    ComplexImage& y = out[c];
    detail::fftshift(a.data(), y.data(), h, w);
    for (std::size_t k = 0; k < n; ++k)
      if (!model.mask[k]) y[k] = 0.0;
  }
  return out;
}

inline ComplexImage adjoint(const ForwardModel& model, const MultiCoilKSpace& y) {
  model.check_kspace(y);
  const std::size_t h = model.height(), w = model.width(), n = h * w;
  ComplexImage out(h, w), a(h, w), b(h, w);
  for (std::size_t c = 0; c < model.ncoils(); ++c) {
    const ComplexImage& yc = y[c];
    for (std::size_t k = 0; k < n; ++k) a[k] = model.mask[k] ? yc[k] : cplx{0.0, 0.0};
    detail::ifftshift(a.data(), b.data(), h, w);
    detail::dft_scaled(b.data(), a.data(), h, w, FFTW_BACKWARD);
    detail::fftshift(a.data(), b.data(), h, w);
    const ComplexImage& s = model.smaps[c];
    for (std::size_t k = 0; k < n; ++k) out[k] += std::conj(s[k]) * b[k];
  }
  return out;
}

/// sum_c A_c^H A_c x. Bitwise identical to adjoint(forward(x)): the shifts
/// around the mask cancel exactly, so the mask is applied in unshifted order.
class NormalOperator {
 public:
  explicit NormalOperator(const ForwardModel& model)
      : model_(&model), h_(model.height()), w_(model.width()), a_(h_, w_), b_(h_, w_),
        shifted_mask_(h_ * w_) {
    ComplexImage m(h_, w_), ms(h_, w_);
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = model.mask[k];
    detail::ifftshift(m.data(), ms.data(), h_, w_);
    for (std::size_t k = 0; k < m.size(); ++k) shifted_mask_[k] = ms[k].real() != 0.0;
  }

  void apply(const ComplexImage& x, ComplexImage& out) {
    model_->check_image(x);
    const std::size_t n = h_ * w_;
    if (!out.same_shape(x)) out = ComplexImage(h_, w_);
    std::fill(out.storage().begin(), out.storage().end(), cplx{0.0, 0.0});
    for (std::size_t c = 0; c < model_->ncoils(); ++c) {
      const ComplexImage& s = model_->smaps[c];
      for (std::size_t k = 0; k < n; ++k) a_[k] = s[k] * x[k];
      detail::ifftshift(a_.data(), b_.data(), h_, w_);
      detail::dft_scaled(b_.data(), a_.data(), h_, w_, FFTW_FORWARD);
      for (std::size_t k = 0; k < n; ++k)
        if (!shifted_mask_[k]) a_[k] = 0.0;
      detail::dft_scaled(a_.data(), b_.data(), h_, w_, FFTW_BACKWARD);
      detail::fftshift(b_.data(), a_.data(), h_, w_);
      for (std::size_t k = 0; k < n; ++k) out[k] += std::conj(s[k]) * a_[k];
    }
  }

  ComplexImage operator()(const ComplexImage& x) {
    ComplexImage out(h_, w_);
    apply(x, out);
    return out;
  }

 private:
  const ForwardModel* model_;
  std::size_t h_, w_;
  ComplexImage a_, b_;
  std::vector<std::uint8_t> shifted_mask_;
};

inline ComplexImage normal_op(const ForwardModel& model, const ComplexImage& x) {
  NormalOperator op(model);
  return op(x);
}

}  // namespace londn
