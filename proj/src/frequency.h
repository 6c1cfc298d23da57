#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.h"

namespace licattack {

enum class Band { kLow, kHigh };

Band band_from_string(const std::string& s);
std::string band_to_string(Band b);

// Binary mask over DCT coefficients selecting the band that the truncation
// operator keeps. Frequencies are ordered by the normalized anti-diagonal
// index u/(H-1) + v/(W-1); ties break by (u, v) ascending.
struct FrequencyMask {
  int h = 0;
  int w = 0;
  Band band = Band::kLow;
  double fraction = 0.5;
  std::vector<uint8_t> m;  // row-major h*w, entries 0/1

  uint8_t at(int u, int v) const { return m[static_cast<size_t>(u) * w + v]; }
  size_t ones() const;
  FrequencyMask complement() const;
};

// Keeps round(fraction*H*W) coefficients: lowest frequencies first for
// Band::kLow, highest first for Band::kHigh.
FrequencyMask build_mask(int h, int w, Band band, double fraction);

// T(x) = IDCT(M . DCT(x)) per channel. Output is an analysis quantity and is
// deliberately not clipped to [0,1]. Linear and idempotent in x.
Tensor truncate(const Tensor& img, const FrequencyMask& mask);

// Sum over channels of ||T(x_c) - T(x_adv_c)||_F.
double ic_loss(const Tensor& x, const Tensor& x_adv, const FrequencyMask& mask);

// Same value plus d(ic_loss)/d(x_adv). At x_adv == x the norm is not
// differentiable; the zero subgradient is returned there.
double ic_loss_with_grad(const Tensor& x, const Tensor& x_adv,
                         const FrequencyMask& mask, Tensor* grad);

}  // namespace licattack
