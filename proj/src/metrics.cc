#include "metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace licattack {

double psnr(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "psnr");
  const double mse = frobenius_sq_diff(a, b) / static_cast<double>(a.size());
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, -10.0 * std::log10(mse));
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr std::array<double, 5> kScaleWeights = {0.0448, 0.2856, 0.3001,
                                                 0.2363, 0.1333};

std::array<double, kWin> gaussian_kernel() {
  std::array<double, kWin> k{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    k[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    sum += k[i];
  }
  for (double& x : k) x /= sum;
  return k;
}

struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
};

// Separable 11-tap Gaussian, valid region only.
Plane gauss_valid(const Plane& in) {
  static const std::array<double, kWin> k = gaussian_kernel();
  const int oh = in.h - kWin + 1, ow = in.w - kWin + 1;
  Plane mid{in.h, ow, std::vector<double>(static_cast<size_t>(in.h) * ow)};
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWin; ++i) s += k[i] * in.at(y, x + i);
      mid.at(y, x) = s;
    }
  Plane out{oh, ow, std::vector<double>(static_cast<size_t>(oh) * ow)};
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWin; ++i) s += k[i] * mid.at(y + i, x);
      out.at(y, x) = s;
    }
  return out;
}

// 2x2 average pooling; odd sizes get one symmetric (edge-repeat) pad row or
// column at the bottom/right first.
Plane downsample2(const Plane& in) {
  const int nh = (in.h + 1) / 2, nw = (in.w + 1) / 2;
  Plane out{nh, nw, std::vector<double>(static_cast<size_t>(nh) * nw)};
  auto px = [&](int y, int x) {
    return in.at(std::min(y, in.h - 1), std::min(x, in.w - 1));
  };
  for (int y = 0; y < nh; ++y)
    for (int x = 0; x < nw; ++x)
      out.at(y, x) = 0.25 * (px(2 * y, 2 * x) + px(2 * y, 2 * x + 1) +
                             px(2 * y + 1, 2 * x) + px(2 * y + 1, 2 * x + 1));
  return out;
}

// Mean luminance*cs and mean cs over the valid SSIM map of one scale.
void ssim_scale(const Plane& x, const Plane& y, double* mean_ssim,
                double* mean_cs) {
  Plane xy{x.h, x.w, std::vector<double>(x.v.size())};
  Plane xx{x.h, x.w, std::vector<double>(x.v.size())};
  Plane yy{x.h, x.w, std::vector<double>(x.v.size())};
  for (size_t i = 0; i < x.v.size(); ++i) {
    xy.v[i] = x.v[i] * y.v[i];
    xx.v[i] = x.v[i] * x.v[i];
    yy.v[i] = y.v[i] * y.v[i];
  }
  const Plane mx = gauss_valid(x), my = gauss_valid(y);
  const Plane mxy = gauss_valid(xy), mxx = gauss_valid(xx), myy = gauss_valid(yy);

  double ssim_sum = 0.0, cs_sum = 0.0;
  for (size_t i = 0; i < mx.v.size(); ++i) {
    const double num0 = 2.0 * mx.v[i] * my.v[i];
    const double den0 = mx.v[i] * mx.v[i] + my.v[i] * my.v[i];
    const double lum = (num0 + kC1) / (den0 + kC1);
    const double num1 = 2.0 * mxy.v[i];
    const double den1 = mxx.v[i] + myy.v[i];
    const double cs = (num1 - num0 + kC2) / (den1 - den0 + kC2);
    ssim_sum += lum * cs;
    cs_sum += cs;
  }
  const double n = static_cast<double>(mx.v.size());
  *mean_ssim = ssim_sum / n;
  *mean_cs = cs_sum / n;
}

}  // namespace

int ms_ssim_scales(int h, int w) {
  int scales = 0;
  while (scales < 5 && std::min(h, w) >= kWin) {
    ++scales;
    h = (h + 1) / 2;
    w = (w + 1) / 2;
  }
  return scales;
}

double ms_ssim(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "ms_ssim");
  const int scales = ms_ssim_scales(a.h, a.w);
  require(scales >= 1, ErrorCode::kValidation,
          "image too small for ms_ssim (needs at least 11x11)");

  std::array<double, 5> weights{};
  double wsum = 0.0;
  for (int i = 0; i < scales; ++i) wsum += kScaleWeights[i];
  for (int i = 0; i < scales; ++i) weights[i] = kScaleWeights[i] / wsum;

  const size_t plane_n = static_cast<size_t>(a.h) * a.w;
  double channel_sum = 0.0;
  for (int ci = 0; ci < a.c; ++ci) {
    Plane x{a.h, a.w, {a.plane(ci), a.plane(ci) + plane_n}};
    Plane y{b.h, b.w, {b.plane(ci), b.plane(ci) + plane_n}};
    double value = 1.0;
    for (int s = 0; s < scales; ++s) {
      if (s > 0) {
        x = downsample2(x);
        y = downsample2(y);
      }
      double mean_ssim = 0.0, mean_cs = 0.0;
      ssim_scale(x, y, &mean_ssim, &mean_cs);
      const double factor =
          s == scales - 1 ? std::max(0.0, mean_ssim) : std::max(0.0, mean_cs);
      value *= std::pow(factor, weights[s]);
    }
    channel_sum += value;
  }
  return channel_sum / a.c;
}

QualityScore quality(const Image& a, const Image& b) {
  return QualityScore{psnr(a.px, b.px), ms_ssim(a.px, b.px)};
}

Degradation degradation(const QualityScore& ae_pair,
                        const QualityScore& recon_pair) {
  return Degradation{ae_pair.psnr - recon_pair.psnr,
                     ae_pair.ms_ssim - recon_pair.ms_ssim};
}

}  // namespace licattack
