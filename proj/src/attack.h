#pragma once

#include <vector>

#include "codec.h"
#include "frequency.h"
#include "image.h"
#include "metrics.h"

namespace licattack {

enum class InitMode { kZero, kRandom };

InitMode init_from_string(const std::string& s);
std::string init_to_string(InitMode m);

// Reconstruction-distortion attack settings. eps lives on the 8-bit scale
// (32 means +/-32 grey levels) and is divided by 255 internally.
struct AttackConfig {
  double eps = 32.0;
  double eta = 100.0;
  int steps = 200;
  double alpha = 0.0;  // normalized step size; <= 0 picks 2.5*eps_norm/steps
  bool ic_enabled = true;
  Band ic_band = Band::kLow;
  double ic_fraction = 0.5;
  QuantizerMode quantizer = QuantizerMode::kCubic;
  InitMode init = InitMode::kZero;
  uint64_t seed = 0;
  bool best_tracking = true;

  double eps_norm() const { return eps / 255.0; }
  double effective_alpha() const {
    return alpha > 0.0 ? alpha : 2.5 * eps_norm() / std::max(steps, 1);
  }
  void validate() const;
};

struct TracePoint {
  double total = 0.0;       // -distortion + eta * ic, the minimized value
  double distortion = 0.0;  // ||x - recon(x+delta)||_F^2, before negation
  double ic = 0.0;          // imperceptibility penalty, 0 when disabled
};

struct AttackResult {
  Tensor delta;                    // effective perturbation after projections
  Image x_adv;                     // clip01(x + delta)
  Image x_adv_8bit;                // what gets written to disk
  Image recon_adv;                 // hard-quantizer reconstruction of the 8-bit AE
  std::vector<TracePoint> trace;   // length steps_executed + 1
  int steps_executed = 0;
  double final_loss = 0.0;         // loss of the returned delta
  int best_step = 0;               // trace index the returned delta came from
  QualityScore ae_vs_original;     // 8-bit AE against the original
  QualityScore ae_vs_reconstructed;  // 8-bit AE against its reconstruction
};

// Element-wise clamp into [-eps_norm, +eps_norm].
Tensor project_linf(const Tensor& delta, double eps_norm);

// The minimized objective: -||x - recon(x+delta)||_F^2 + eta*IC(x, x+delta),
// with its gradient w.r.t. delta when `grad` is non-null. `mask` may be null
// only when eta == 0 or ic is disabled (the IC term is then zero).
TracePoint adv_loss(const Tensor& x, const Tensor& delta,
                    const CodecModel& model, const FrequencyMask* mask,
                    double eta, QuantizerMode mode, uint64_t noise_seed,
                    Tensor* grad);

// Sign-gradient projected descent on adv_loss. Every iterate satisfies both
// the L-inf budget and pixel validity (delta is re-read as clip01(x+delta)-x
// after each step). Deterministic for a fixed (x, model, config).
AttackResult pgd_attack(const Image& x, const CodecModel& model,
                        const AttackConfig& config);

// (delta - min) / (max - min) per image for inspection; an all-equal delta
// (e.g. zero) renders as 0.5 mid-gray.
Image delta_visualization(const Tensor& delta);

}  // namespace licattack
