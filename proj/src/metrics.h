#pragma once

#include "image.h"
#include "tensor.h"

namespace licattack {

struct QualityScore {
  double psnr = 0.0;
  double ms_ssim = 0.0;
};

// PSNR in dB on the [0,1] scale (identical to the 255-scale value).
// Identical images return the 100 dB cap instead of infinity.
double psnr(const Tensor& a, const Tensor& b);

// Multi-scale SSIM, 11x11 Gaussian window sigma 1.5, k1=0.01, k2=0.03,
// data range 1.0, standard five scale weights. Images whose smallest side is
// under 161 use as many scales as fit (renormalized weights); under 11 is an
// error. Color images score each channel independently and return the mean.
double ms_ssim(const Tensor& a, const Tensor& b);

// Number of scales ms_ssim will use for a given image size (0 = too small).
int ms_ssim_scales(int h, int w);

QualityScore quality(const Image& a, const Image& b);

// Delta columns: metric(ae_pair) - metric(recon_pair), the per-row attack
// effectiveness numbers.
struct Degradation {
  double d_psnr = 0.0;
  double d_ms_ssim = 0.0;
};
Degradation degradation(const QualityScore& ae_pair,
                        const QualityScore& recon_pair);

}  // namespace licattack
