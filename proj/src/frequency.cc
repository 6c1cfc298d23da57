#include "frequency.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dct.h"

namespace licattack {

Band band_from_string(const std::string& s) {
  if (s == "low") return Band::kLow;
  if (s == "high") return Band::kHigh;
  fail(ErrorCode::kValidation, "unknown band: " + s + " (expected low|high)");
}

std::string band_to_string(Band b) {
  return b == Band::kLow ? "low" : "high";
}

size_t FrequencyMask::ones() const {
  return static_cast<size_t>(std::count(m.begin(), m.end(), uint8_t{1}));
}

FrequencyMask FrequencyMask::complement() const {
  FrequencyMask out = *this;
  out.band = band == Band::kLow ? Band::kHigh : Band::kLow;
  out.fraction = 1.0 - fraction;
  for (auto& x : out.m) x = x ? 0 : 1;
  return out;
}

FrequencyMask build_mask(int h, int w, Band band, double fraction) {
  require(h > 0 && w > 0, ErrorCode::kValidation, "mask dimensions must be positive");
  require(fraction > 0.0 && fraction <= 1.0, ErrorCode::kValidation,
          "mask fraction must be in (0,1]");

  const size_t total = static_cast<size_t>(h) * w;
  size_t keep = static_cast<size_t>(std::lround(fraction * static_cast<double>(total)));
  keep = std::min(keep, total);

  // Frequency score; degenerate single-row/column axes contribute nothing.
  auto score = [&](int u, int v) {
    double s = 0.0;
    if (h > 1) s += static_cast<double>(u) / (h - 1);
    if (w > 1) s += static_cast<double>(v) / (w - 1);
    return s;
  };

  std::vector<uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    const int ua = a / w, va = a % w, ub = b / w, vb = b % w;
    const double sa = score(ua, va), sb = score(ub, vb);
    if (sa != sb) return band == Band::kLow ? sa < sb : sa > sb;
    if (ua != ub) return ua < ub;
    return va < vb;
  });

  FrequencyMask mask;
  mask.h = h;
  mask.w = w;
  mask.band = band;
  mask.fraction = fraction;
  mask.m.assign(total, 0);
  for (size_t i = 0; i < keep; ++i) mask.m[order[i]] = 1;
  return mask;
}

namespace {

void check_mask_dims(const Tensor& t, const FrequencyMask& mask, const char* what) {
  require(t.h == mask.h && t.w == mask.w, ErrorCode::kValidation,
          std::string(what) + ": mask dimensions do not match image");
}

void truncate_plane(const double* in, double* out, const FrequencyMask& mask) {
  const int h = mask.h, w = mask.w;
  std::vector<double> coeffs(static_cast<size_t>(h) * w);
  dct2_plane(in, coeffs.data(), h, w);
  for (size_t i = 0; i < coeffs.size(); ++i)
    if (!mask.m[i]) coeffs[i] = 0.0;
  idct2_plane(coeffs.data(), out, h, w);
}

}  // namespace

Tensor truncate(const Tensor& img, const FrequencyMask& mask) {
  check_mask_dims(img, mask, "truncate");
  require(img.all_finite(), ErrorCode::kValidation, "truncate: non-finite input");
  Tensor out = Tensor::zeros_like(img);
  for (int ci = 0; ci < img.c; ++ci)
    truncate_plane(img.plane(ci), out.plane(ci), mask);
  return out;
}

double ic_loss(const Tensor& x, const Tensor& x_adv, const FrequencyMask& mask) {
  return ic_loss_with_grad(x, x_adv, mask, nullptr);
}

double ic_loss_with_grad(const Tensor& x, const Tensor& x_adv,
                         const FrequencyMask& mask, Tensor* grad) {
  check_same_shape(x, x_adv, "ic_loss");
  check_mask_dims(x, mask, "ic_loss");

  const Tensor tx = truncate(x, mask);
  const Tensor ta = truncate(x_adv, mask);
  if (grad) *grad = Tensor::zeros_like(x);

  const size_t plane_n = static_cast<size_t>(x.h) * x.w;
  double total = 0.0;
  for (int ci = 0; ci < x.c; ++ci) {
    const double* px = tx.plane(ci);
    const double* pa = ta.plane(ci);
    double sq = 0.0;
    for (size_t i = 0; i < plane_n; ++i) {
      const double d = pa[i] - px[i];
      sq += d * d;
    }
    const double norm = std::sqrt(sq);
    total += norm;
    if (grad && norm > 1e-12) {
      // d||T(x_adv) - T(x)||/d(x_adv) = T(T(x_adv) - T(x)) / norm,
      // using that T is linear, self-adjoint, and idempotent.
      std::vector<double> diff(plane_n);
      for (size_t i = 0; i < plane_n; ++i) diff[i] = pa[i] - px[i];
      std::vector<double> back(plane_n);
      truncate_plane(diff.data(), back.data(), mask);
      double* g = grad->plane(ci);
      for (size_t i = 0; i < plane_n; ++i) g[i] = back[i] / norm;
    }
  }
  return total;
}

}  // namespace licattack
