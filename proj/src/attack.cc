#include "attack.h"

#include <algorithm>
#include <cmath>

#include "error.h"

namespace licattack {

InitMode init_from_string(const std::string& s) {
  if (s == "zero") return InitMode::kZero;
  if (s == "random") return InitMode::kRandom;
  fail(ErrorCode::kValidation, "unknown init mode: " + s);
}

std::string init_to_string(InitMode m) {
  return m == InitMode::kZero ? "zero" : "random";
}

void AttackConfig::validate() const {
  require(eps >= 0.0, ErrorCode::kValidation, "eps must be >= 0");
  require(eta >= 0.0, ErrorCode::kValidation, "eta must be >= 0");
  require(steps >= 0, ErrorCode::kValidation, "steps must be >= 0");
  // eps == 0 short-circuits into the no-op path, where step size is moot.
  require(steps == 0 || eps == 0.0 || effective_alpha() > 0.0,
          ErrorCode::kValidation, "step size must be positive when steps > 0");
  require(ic_fraction > 0.0 && ic_fraction <= 1.0, ErrorCode::kValidation,
          "ic fraction must lie in (0, 1]");
}

Tensor project_linf(const Tensor& delta, double eps_norm) {
  require(eps_norm >= 0.0, ErrorCode::kValidation,
          "L-inf radius must be >= 0");
  Tensor out = delta;
  clamp_inplace(out, -eps_norm, eps_norm);
  return out;
}

TracePoint adv_loss(const Tensor& x, const Tensor& delta,
                    const CodecModel& model, const FrequencyMask* mask,
                    double eta, QuantizerMode mode, uint64_t noise_seed,
                    Tensor* grad) {
  check_same_shape(x, delta, "adv_loss");
  const Tensor x_adv = x + delta;

  TracePoint pt;
  Tensor recon;
  // d(-||x - r||^2)/dr = 2(x - r)
  auto upstream = [&x](const Tensor& r) {
    Tensor d(r.c, r.h, r.w);
    for (size_t i = 0; i < d.v.size(); ++i) d.v[i] = 2.0 * (x.v[i] - r.v[i]);
    return d;
  };

  if (grad) {
    *grad = model.reconstruct_vjp(x_adv, mode, noise_seed, upstream, &recon);
  } else {
    recon = model.reconstruct(x_adv, mode, noise_seed);
  }
  pt.distortion = frobenius_sq_diff(x, recon);

  const bool want_ic = mask != nullptr && eta > 0.0;
  if (want_ic) {
    if (grad) {
      Tensor gic;
      pt.ic = ic_loss_with_grad(x, x_adv, *mask, &gic);
      for (size_t i = 0; i < grad->v.size(); ++i)
        grad->v[i] += eta * gic.v[i];
    } else {
      pt.ic = ic_loss(x, x_adv, *mask);
    }
  }

  pt.total = -pt.distortion + eta * pt.ic;
  require(std::isfinite(pt.total), ErrorCode::kNumeric,
          "attack loss is non-finite (distortion " +
              std::to_string(pt.distortion) + ", ic " + std::to_string(pt.ic) +
              ")");
  return pt;
}

namespace {

// Re-express delta as the perturbation actually applied to a valid image:
// clip01(x+delta)-x. Never increases |delta| per pixel, so the L-inf budget
// survives the projection.
void project_pixel_validity(const Tensor& x, Tensor& delta) {
  for (size_t i = 0; i < delta.v.size(); ++i) {
    const double xv = x.v[i];
    const double adv = std::min(1.0, std::max(0.0, xv + delta.v[i]));
    delta.v[i] = adv - xv;
  }
}

}  // namespace

AttackResult pgd_attack(const Image& x, const CodecModel& model,
                        const AttackConfig& config) {
  config.validate();
  validate_image(x, /*require_range=*/true);
  check_stride_compatible(model, x.px);

  const double eps_norm = config.eps_norm();
  const double alpha = config.effective_alpha();
  const double eta = config.ic_enabled ? config.eta : 0.0;

  FrequencyMask mask;
  const FrequencyMask* mask_ptr = nullptr;
  if (eta > 0.0) {
    mask = build_mask(x.px.h, x.px.w, config.ic_band, config.ic_fraction);
    mask_ptr = &mask;
  }

  Rng noise_rng(Rng::derive(config.seed, 0x514e4f49));  // quantizer noise

  AttackResult res;
  res.delta = Tensor::zeros_like(x.px);

  if (config.eps == 0.0 || config.steps == 0) {
    // Empty ball or no iterations: delta stays at zero (random init inside a
    // zero-radius ball is also zero), only the initial loss is recorded.
    res.trace.push_back(adv_loss(x.px, res.delta, model, mask_ptr, eta,
                                 config.quantizer, noise_rng.next_u64(),
                                 nullptr));
    res.final_loss = res.trace[0].total;
  } else {
    if (config.init == InitMode::kRandom) {
      Rng init_rng(Rng::derive(config.seed, 0x54494e49));
      for (double& v : res.delta.v) v = init_rng.uniform(-eps_norm, eps_norm);
      project_pixel_validity(x.px, res.delta);
    }

    Tensor grad;
    TracePoint pt = adv_loss(x.px, res.delta, model, mask_ptr, eta,
                             config.quantizer, noise_rng.next_u64(), &grad);
    res.trace.push_back(pt);
    Tensor best_delta = res.delta;
    double best_loss = pt.total;
    int best_step = 0;

    for (int step = 1; step <= config.steps; ++step) {
      require(grad.all_finite(), ErrorCode::kNumeric,
              "non-finite attack gradient at step " + std::to_string(step));
      for (size_t i = 0; i < res.delta.v.size(); ++i) {
        const double g = grad.v[i];
        const double s = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        res.delta.v[i] = std::min(
            eps_norm, std::max(-eps_norm, res.delta.v[i] - alpha * s));
      }
      project_pixel_validity(x.px, res.delta);

      const bool need_grad = step < config.steps;
      pt = adv_loss(x.px, res.delta, model, mask_ptr, eta, config.quantizer,
                    noise_rng.next_u64(), need_grad ? &grad : nullptr);
      res.trace.push_back(pt);
      if (pt.total < best_loss) {
        best_loss = pt.total;
        best_delta = res.delta;
        best_step = step;
      }
    }

    res.steps_executed = config.steps;
    if (config.best_tracking) {
      res.delta = std::move(best_delta);
      res.final_loss = best_loss;
      res.best_step = best_step;
    } else {
      res.final_loss = res.trace.back().total;
      res.best_step = res.steps_executed;
    }
  }

  // Evaluation path: the 8-bit adversarial PNG through the hard quantizer,
  // i.e. what the deployed codec would actually receive.
  res.x_adv = clip01(make_image(x.px + res.delta));
  res.x_adv_8bit = quantize8(res.x_adv);
  const Image x8 = quantize8(clip01(x));
  const Tensor recon = model.reconstruct(res.x_adv_8bit.px, QuantizerMode::kHard);
  res.recon_adv = quantize8(make_image(clip01_tensor(recon)));
  res.ae_vs_original = quality(x8, res.x_adv_8bit);
  res.ae_vs_reconstructed = quality(res.x_adv_8bit, res.recon_adv);
  return res;
}

Image delta_visualization(const Tensor& delta) {
  double lo = delta.v.empty() ? 0.0 : delta.v[0];
  double hi = lo;
  for (double v : delta.v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Tensor vis = Tensor::zeros_like(delta);
  if (hi - lo < 1e-12) {
    std::fill(vis.v.begin(), vis.v.end(), 0.5);
  } else {
    const double inv = 1.0 / (hi - lo);
    for (size_t i = 0; i < vis.v.size(); ++i) vis.v[i] = (delta.v[i] - lo) * inv;
  }
  return make_image(std::move(vis));
}

}  // namespace licattack
