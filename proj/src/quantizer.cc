#include "quantizer.h"

#include <cmath>

namespace licattack {

QuantizerMode quantizer_from_string(const std::string& s) {
  if (s == "hard") return QuantizerMode::kHard;
  if (s == "cubic") return QuantizerMode::kCubic;
  if (s == "ste") return QuantizerMode::kSte;
  if (s == "noise") return QuantizerMode::kNoise;
  fail(ErrorCode::kValidation,
       "unknown quantizer: " + s + " (expected hard|cubic|ste|noise)");
}

std::string quantizer_to_string(QuantizerMode m) {
  switch (m) {
    case QuantizerMode::kHard: return "hard";
    case QuantizerMode::kCubic: return "cubic";
    case QuantizerMode::kSte: return "ste";
    case QuantizerMode::kNoise: return "noise";
  }
  return "?";
}

Tensor quantize_hard(const Tensor& y) {
  require(y.all_finite(), ErrorCode::kValidation, "quantize: non-finite input");
  Tensor out = y;
  for (double& v : out.v) v = std::round(v);
  return out;
}

Tensor quantize_cubic(const Tensor& y, Tensor* deriv) {
  require(y.all_finite(), ErrorCode::kValidation, "quantize: non-finite input");
  Tensor out = y;
  if (deriv) *deriv = Tensor::zeros_like(y);
  for (size_t i = 0; i < out.v.size(); ++i) {
    const double r = out.v[i] - std::round(out.v[i]);
    out.v[i] = std::round(out.v[i]) + r * r * r;
    if (deriv) deriv->v[i] = 3.0 * r * r;
  }
  return out;
}

Tensor apply_quantizer(const Tensor& y, QuantizerMode mode, Rng* rng,
                       Tensor* deriv) {
  switch (mode) {
    case QuantizerMode::kHard: {
      if (deriv) *deriv = Tensor::zeros_like(y);
      return quantize_hard(y);
    }
    case QuantizerMode::kCubic:
      return quantize_cubic(y, deriv);
    case QuantizerMode::kSte: {
      Tensor out = quantize_hard(y);
      if (deriv) *deriv = Tensor(y.c, y.h, y.w, 1.0);
      return out;
    }
    case QuantizerMode::kNoise: {
      require(rng != nullptr, ErrorCode::kValidation,
              "noise quantizer needs an RNG");
      require(y.all_finite(), ErrorCode::kValidation, "quantize: non-finite input");
      Tensor out = y;
      for (double& v : out.v) v += rng->uniform(-0.5, 0.5);
      if (deriv) *deriv = Tensor(y.c, y.h, y.w, 1.0);
      return out;
    }
  }
  fail(ErrorCode::kInternal, "unreachable quantizer mode");
}

}  // namespace licattack
