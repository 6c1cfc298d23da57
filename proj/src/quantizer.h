#pragma once

#include <string>

#include "rng.h"
#include "tensor.h"

namespace licattack {

// How the latent quantizer behaves during gradient-based work:
//   kHard  - plain rounding, no gradient (evaluation path)
//   kCubic - round(y) + residual^3 surrogate, analytic derivative 3r^2
//   kSte   - rounds forward, passes gradients through unchanged
//   kNoise - adds uniform(-0.5, 0.5) noise, identity derivative
enum class QuantizerMode { kHard, kCubic, kSte, kNoise };

QuantizerMode quantizer_from_string(const std::string& s);
std::string quantizer_to_string(QuantizerMode m);

// Element-wise round-half-away-from-zero.
Tensor quantize_hard(const Tensor& y);

// Cubic surrogate. Forward stays within 0.125 of quantize_hard everywhere
// (|r|^3 <= 0.5^3). Optionally emits the element-wise derivative.
Tensor quantize_cubic(const Tensor& y, Tensor* deriv);

// Dispatch on mode; `deriv` (when non-null) receives d(out)/d(in) per
// element. kNoise draws from `rng`, which therefore must be supplied.
Tensor apply_quantizer(const Tensor& y, QuantizerMode mode, Rng* rng,
                       Tensor* deriv);

}  // namespace licattack
