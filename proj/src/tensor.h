#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "error.h"

namespace licattack {

// Dense planar tensor of doubles, laid out channel-major: v[(c*h + y)*w + x].
// Used for images ([0,1] pixels), latents, and gradients alike.
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_, double fill = 0.0)
      : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {
    require(c_ > 0 && h_ > 0 && w_ > 0, ErrorCode::kValidation,
            "tensor dimensions must be positive");
  }

  size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const {
    return c == o.c && h == o.h && w == o.w;
  }

  double& at(int ci, int y, int x) {
    return v[(static_cast<size_t>(ci) * h + y) * w + x];
  }
  double at(int ci, int y, int x) const {
    return v[(static_cast<size_t>(ci) * h + y) * w + x];
  }

  double* plane(int ci) { return v.data() + static_cast<size_t>(ci) * h * w; }
  const double* plane(int ci) const {
    return v.data() + static_cast<size_t>(ci) * h * w;
  }

  static Tensor zeros_like(const Tensor& o) { return Tensor(o.c, o.h, o.w); }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

// Elementwise helpers shared by the attack and training loops.

inline void check_same_shape(const Tensor& a, const Tensor& b,
                             const char* what) {
  require(a.same_shape(b), ErrorCode::kValidation,
          std::string(what) + ": shape mismatch");
}

inline double frobenius_sq(const Tensor& a) {
  double s = 0.0;
  for (double x : a.v) s += x * x;
  return s;
}

inline double frobenius_sq_diff(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "frobenius_sq_diff");
  double s = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    s += d * d;
  }
  return s;
}

inline double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double x : a.v) m = std::max(m, std::abs(x));
  return m;
}

inline Tensor operator+(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "tensor add");
  Tensor out = a;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
  return out;
}

inline Tensor operator-(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "tensor sub");
  Tensor out = a;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= b.v[i];
  return out;
}

inline Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (double& x : out.v) x *= s;
  return out;
}

inline void clamp_inplace(Tensor& a, double lo, double hi) {
  for (double& x : a.v) x = std::min(hi, std::max(lo, x));
}

}  // namespace licattack
