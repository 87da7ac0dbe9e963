// MoDL-style unrolled reconstructor: L blocks of (denoiser -> CG data
// consistency) with weights shared across blocks, plus supervised training.
#pragma once

#include <functional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "londn/adam.hpp"
#include "londn/denoiser.hpp"
#include "londn/forward_model.hpp"
#include "londn/parallel.hpp"

namespace londn {

struct UnrollConfig {
  std::size_t blocks = 5;
  double nu = 1.0;
  double mu_over_nu = 0.1;
  double cg_tol = 1e-5;
  std::size_t cg_max_iter = 50;

  double mu() const { return mu_over_nu * nu; }

  void validate() const {
    if (blocks < 1) throw std::invalid_argument("UnrollConfig: blocks must be >= 1");
    if (!(nu > 0.0)) throw std::invalid_argument("UnrollConfig: nu must be > 0");
    if (!(mu_over_nu > 0.0)) throw std::invalid_argument("UnrollConfig: mu/nu must be > 0");
    if (!(cg_tol > 0.0)) throw std::invalid_argument("UnrollConfig: cg_tol must be > 0");
  }

  friend bool operator==(const UnrollConfig&, const UnrollConfig&) = default;
};

struct TrainingPair {
  ComplexImage x0;
  ComplexImage target;
  ForwardModel model;
  MultiCoilKSpace ksp;
};

struct CgResult {
  ComplexImage x;
  std::size_t iterations = 0;
  double rel_residual = 0.0;
  bool not_converged = false;
  /// Squared residual norm before the first and after every iteration.
  std::vector<double> residual_history;
};

/// Conjugate gradient for a Hermitian positive definite `apply`. Stops when
/// ||b - Ax|| <= tol * ||b|| or after max_iter iterations.
inline CgResult conjugate_gradient(const std::function<void(const ComplexImage&, ComplexImage&)>& apply,
                                   const ComplexImage& b, ComplexImage x, double tol,
                                   std::size_t max_iter) {
  CgResult res;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.x = ComplexImage(b.height(), b.width());
    return res;
  }
  ComplexImage q(b.height(), b.width());
  apply(x, q);
  ComplexImage r = b - q;
  double rs = norm_sq(r);
  res.residual_history.push_back(rs);
  res.rel_residual = std::sqrt(rs) / bnorm;
  ComplexImage p = r;
  while (res.rel_residual > tol && res.iterations < max_iter) {
    apply(p, q);
    const double pq = inner(p, q).real();
    if (!(pq > 0.0)) break;
    const double alpha = rs / pq;
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    const double rs_new = norm_sq(r);
    res.iterations += 1;
    res.residual_history.push_back(rs_new);
    res.rel_residual = std::sqrt(rs_new) / bnorm;
    const double beta = rs_new / rs;
    rs = rs_new;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = r[k] + beta * p[k];
  }
  res.not_converged = res.rel_residual > tol;
  res.x = std::move(x);
  return res;
}

namespace detail {

/// Q = nu * A^H A + mu * I for one forward model.
class DcSystem {
 public:
  DcSystem(const ForwardModel& model, const UnrollConfig& cfg)
      : normal_(model), nu_(cfg.nu), mu_(cfg.mu()), tol_(cfg.cg_tol), max_iter_(cfg.cg_max_iter) {}

  void apply(const ComplexImage& x, ComplexImage& out) {
    normal_.apply(x, out);
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = nu_ * out[k] + mu_ * x[k];
  }

  /// argmin_x nu ||Ax - y||^2 + mu ||x - z||^2, with aty = A^H y.
  CgResult solve(const ComplexImage& aty, const ComplexImage& z) {
    ComplexImage b(z.height(), z.width());
    for (std::size_t k = 0; k < b.size(); ++k) b[k] = nu_ * aty[k] + mu_ * z[k];
    return conjugate_gradient([this](const ComplexImage& x, ComplexImage& o) { apply(x, o); }, b, z,
                              tol_, max_iter_);
  }

  /// mu * Q^{-1} g: the adjoint of z -> x*(z).
  CgResult pullback(const ComplexImage& g) {
    CgResult u = conjugate_gradient([this](const ComplexImage& x, ComplexImage& o) { apply(x, o); },
                                    g, ComplexImage(g.height(), g.width()), tol_, max_iter_);
    u.x *= mu_;
    return u;
  }

  double mu() const { return mu_; }

 private:
  NormalOperator normal_;
  double nu_, mu_, tol_;
  std::size_t max_iter_;
};

}  // namespace detail

/// Data-consistency block: solves (nu A^H A + mu I) x = nu A^H y + mu z by CG
/// warm-started at z. Non-convergence is reported through the result flag.
inline CgResult dc_block(const ForwardModel& model, const UnrollConfig& cfg,
                         const MultiCoilKSpace& ksp, const ComplexImage& z) {
  cfg.validate();
  model.check_image(z);
  detail::DcSystem sys(model, cfg);
  return sys.solve(adjoint(model, ksp), z);
}

struct UnrollTape {
  std::vector<DenoiserTape> denoiser;
  std::vector<std::size_t> cg_iterations;
  std::vector<ComplexImage> iterates;  // x^0 .. x^L
  bool cg_not_converged = false;
};

inline ComplexImage unroll_forward(const DenoiserParams& params, const DenoiserConfig& dcfg,
                                   const UnrollConfig& ucfg, const ComplexImage& x0,
                                   const ForwardModel& model, const MultiCoilKSpace& ksp,
                                   UnrollTape* tape = nullptr) {
  ucfg.validate();
  model.check_image(x0);
  detail::DcSystem sys(model, ucfg);
  const ComplexImage aty = adjoint(model, ksp);
  ComplexImage x = x0;
  if (tape) {
    *tape = UnrollTape{};
    tape->denoiser.resize(ucfg.blocks);
    tape->iterates.push_back(x0);
  }
  for (std::size_t l = 0; l < ucfg.blocks; ++l) {
    ComplexImage z = denoise(params, dcfg, x, tape ? &tape->denoiser[l] : nullptr);
    CgResult dc = sys.solve(aty, z);
    if (tape) {
      tape->cg_iterations.push_back(dc.iterations);
      tape->cg_not_converged = tape->cg_not_converged || dc.not_converged;
      tape->iterates.push_back(dc.x);
    }
    x = std::move(dc.x);
  }
  return x;
}

struct LossAndGrad {
  double loss = 0.0;
  DenoiserParams grad;
};

/// Squared l2 error of the unrolled output against the target, and its
/// gradient with respect to the shared denoiser weights. Each DC block is
/// differentiated implicitly: dL/dz = mu Q^{-1} dL/dx*.
inline LossAndGrad unroll_grad(const DenoiserParams& params, const DenoiserConfig& dcfg,
                               const UnrollConfig& ucfg, const TrainingPair& pair) {
  UnrollTape tape;
  const ComplexImage xl = unroll_forward(params, dcfg, ucfg, pair.x0, pair.model, pair.ksp, &tape);
  ComplexImage diff = xl - pair.target;
  LossAndGrad out{norm_sq(diff), params.zeros_like()};
  ComplexImage g = diff * 2.0;
  detail::DcSystem sys(pair.model, ucfg);
  for (std::size_t l = ucfg.blocks; l-- > 0;) {
    const CgResult gz = sys.pullback(g);
    g = denoise_backward(params, dcfg, tape.denoiser[l], gz.x, out.grad, l > 0);
  }
  return out;
}

struct TrainOptions {
  std::size_t epochs = 200;
  std::size_t batch = 2;
  double l1_weight = 0.0;
  std::size_t jobs = 1;
  /// Called after every epoch with (epoch, mean training loss).
  std::function<void(std::size_t, double)> on_epoch;
};

struct TrainResult {
  DenoiserParams params;
  std::vector<double> epoch_loss;
};

/// Minibatch training. Each epoch visits the pairs in a fresh seeded
/// permutation; the batch gradient is the mean of per-pair gradients, summed
/// in batch order so results do not depend on `jobs`.
inline TrainResult train(DenoiserParams params, const DenoiserConfig& dcfg, const UnrollConfig& ucfg,
                         const std::vector<TrainingPair>& pairs, AdamState& adam, Rng& rng,
                         const TrainOptions& opt) {
  if (pairs.empty()) throw std::invalid_argument("train: no training pairs");
  if (opt.batch == 0) throw std::invalid_argument("train: batch size must be positive");
  check_params(params, dcfg);
  TrainResult res;
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch) {
      const std::size_t n = std::min(opt.batch, order.size() - start);
      std::vector<LossAndGrad> parts(n);
      parallel_for(n, opt.jobs, [&](std::size_t i) {
        parts[i] = unroll_grad(params, dcfg, ucfg, pairs[order[start + i]]);
      });
      DenoiserParams g = params.zeros_like();
      for (const auto& p : parts) {
        g.axpy(1.0, p.grad);
        loss_sum += p.loss;
      }
      g.scale(1.0 / static_cast<double>(n));
      adam_step(params, g, adam, opt.l1_weight, epoch);
    }
    const double mean = loss_sum / static_cast<double>(pairs.size());
    res.epoch_loss.push_back(mean);
    if (opt.on_epoch) opt.on_epoch(epoch, mean);
  }
  res.params = std::move(params);
  return res;
}

/// "epoch,mean_loss" CSV, one row per epoch, epochs counted from 1.
inline void write_loss_csv(std::ostream& os, const std::vector<double>& epoch_loss) {
  os << "epoch,mean_loss\n";
  os.precision(17);
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) os << e + 1 << "," << epoch_loss[e] << "\n";
}

}  // namespace londn
