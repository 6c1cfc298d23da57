#include "dct.h"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

namespace licattack {

namespace {

// FFTW's REDFT10/REDFT01 are unnormalized; the scale factors below turn them
// into the orthonormal DCT-II/III pair. Plans are cached per shape and the
// cache's scratch buffers are reused under a lock; planning uses
// FFTW_ESTIMATE so results do not depend on measurement noise.
struct PlanEntry {
  fftw_plan plan = nullptr;
  double* in = nullptr;
  double* out = nullptr;
  ~PlanEntry() {
    if (plan) fftw_destroy_plan(plan);
    if (in) fftw_free(in);
    if (out) fftw_free(out);
  }
};

std::mutex g_mutex;
std::map<std::tuple<int, int, int>, PlanEntry> g_plans;

PlanEntry& plan_for(int h, int w, fftw_r2r_kind kind) {
  auto key = std::make_tuple(h, w, static_cast<int>(kind));
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;
  PlanEntry& e = g_plans[key];
  e.in = fftw_alloc_real(static_cast<size_t>(h) * w);
  e.out = fftw_alloc_real(static_cast<size_t>(h) * w);
  e.plan = fftw_plan_r2r_2d(h, w, e.in, e.out, kind, kind, FFTW_ESTIMATE);
  require(e.plan != nullptr, ErrorCode::kInternal, "FFTW planning failed");
  return e;
}

inline double fwd_scale(int k, int n) {
  return (k == 0) ? 0.5 * std::sqrt(1.0 / n) : 0.5 * std::sqrt(2.0 / n);
}

// REDFT01 already leaves the k=0 term undoubled, so the inverse scaling
// keeps the full sqrt(1/n) there instead of half of it.
inline double inv_scale(int k, int n) {
  return (k == 0) ? std::sqrt(1.0 / n) : 0.5 * std::sqrt(2.0 / n);
}

}  // namespace

void dct2_plane(const double* in, double* out, int h, int w) {
  std::lock_guard<std::mutex> lock(g_mutex);
  PlanEntry& e = plan_for(h, w, FFTW_REDFT10);
  std::memcpy(e.in, in, sizeof(double) * h * w);
  fftw_execute(e.plan);
  for (int u = 0; u < h; ++u) {
    const double su = fwd_scale(u, h);
    for (int v = 0; v < w; ++v)
      out[u * w + v] = e.out[u * w + v] * su * fwd_scale(v, w);
  }
}

void idct2_plane(const double* in, double* out, int h, int w) {
  std::lock_guard<std::mutex> lock(g_mutex);
  PlanEntry& e = plan_for(h, w, FFTW_REDFT01);
  for (int u = 0; u < h; ++u) {
    const double su = inv_scale(u, h);
    for (int v = 0; v < w; ++v)
      e.in[u * w + v] = in[u * w + v] * su * inv_scale(v, w);
  }
  fftw_execute(e.plan);
  std::memcpy(out, e.out, sizeof(double) * h * w);
}

Tensor dct2(const Tensor& x) {
  require(x.all_finite(), ErrorCode::kValidation, "dct2: non-finite input");
  Tensor out = Tensor::zeros_like(x);
  for (int ci = 0; ci < x.c; ++ci)
    dct2_plane(x.plane(ci), out.plane(ci), x.h, x.w);
  return out;
}

Tensor idct2(const Tensor& coeffs) {
  require(coeffs.all_finite(), ErrorCode::kValidation, "idct2: non-finite input");
  Tensor out = Tensor::zeros_like(coeffs);
  for (int ci = 0; ci < coeffs.c; ++ci)
    idct2_plane(coeffs.plane(ci), out.plane(ci), coeffs.h, coeffs.w);
  return out;
}

}  // namespace licattack
