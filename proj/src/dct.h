#pragma once

#include "tensor.h"

namespace licattack {

// Orthonormal type-II 2-D DCT applied to each channel plane independently.
// Orthonormality means Parseval holds: ||dct2(x)||_F == ||x||_F.
Tensor dct2(const Tensor& x);

// Exact inverse of dct2 (orthonormal type-III).
Tensor idct2(const Tensor& coeffs);

// Plane-level entry points; in/out may alias.
void dct2_plane(const double* in, double* out, int h, int w);
void idct2_plane(const double* in, double* out, int h, int w);

}  // namespace licattack
