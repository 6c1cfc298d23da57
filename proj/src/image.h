#pragma once

#include <string>

#include "tensor.h"

namespace licattack {

constexpr int kMinImageDim = 32;

// An 8-bit-sourced image held as doubles in [0,1], planar layout.
// Immutable by convention: operations return new images.
struct Image {
  Tensor px;
  int source_bit_depth = 8;

  int height() const { return px.h; }
  int width() const { return px.w; }
  int channels() const { return px.c; }
};

// Validates the Image invariants (finite, dims, channel count). Range is only
// checked when require_range is set; raw attack tensors may leave [0,1].
void validate_image(const Image& img, bool require_range = false);

Image make_image(Tensor px);

// Reads an 8-bit grayscale or RGB PNG. Pixels become value/255 exactly.
Image load_png(const std::string& path);

// Writes 8 bits per sample, round(value*255) half-away-from-zero, clamped.
void save_png(const Image& img, const std::string& path);

// Clamp every pixel into [0,1]. Idempotent.
Image clip01(const Image& img);
Tensor clip01_tensor(const Tensor& t);

// round(v*255)/255 on every pixel: what a save/load roundtrip produces,
// without touching the filesystem. Report-path metrics run on these.
Image quantize8(const Image& img);
Tensor quantize8_tensor(const Tensor& t);

}  // namespace licattack
