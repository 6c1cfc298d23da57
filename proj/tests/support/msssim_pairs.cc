#include "msssim_pairs.h"

#include <cmath>

#include "dataset.h"
#include "frequency.h"
#include "rng.h"
#include "tensor.h"

namespace licattack::testing {

namespace {

Tensor gray_of(const Tensor& rgb) {
  Tensor g(1, rgb.h, rgb.w);
  for (int y = 0; y < rgb.h; ++y)
    for (int x = 0; x < rgb.w; ++x)
      g.at(0, y, x) =
          (rgb.at(0, y, x) + rgb.at(1, y, x) + rgb.at(2, y, x)) / 3.0;
  return g;
}

Tensor base(int h, int w, int channels, uint64_t seed) {
  const Tensor rgb = synth_image(h, w, seed).px;
  return channels == 1 ? gray_of(rgb) : rgb;
}

Tensor add_noise(const Tensor& t, double amp, uint64_t seed) {
  Rng rng(seed);
  Tensor out = t;
  for (double& v : out.v) v += rng.uniform(-amp, amp);
  return out;
}

Tensor contrast(const Tensor& t, double k) {
  Tensor out = t;
  for (double& v : out.v) v = 0.5 + k * (v - 0.5);
  return out;
}

Tensor shift(const Tensor& t, double d) {
  Tensor out = t;
  for (double& v : out.v) v += d;
  return out;
}

Tensor checkerboard(const Tensor& t, double amp) {
  Tensor out = t;
  for (int c = 0; c < t.c; ++c)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x)
        out.at(c, y, x) += ((y + x) & 1) ? amp : -amp;
  return out;
}

Tensor box3(const Tensor& t) {
  Tensor out = t;
  for (int c = 0; c < t.c; ++c)
    for (int y = 0; y < t.h; ++y)
      for (int x = 1; x + 1 < t.w; ++x)
        out.at(c, y, x) =
            (t.at(c, y, x - 1) + t.at(c, y, x) + t.at(c, y, x + 1)) / 3.0;
  return out;
}

Tensor blend(const Tensor& a, const Tensor& b, double wa) {
  Tensor out = a;
  for (size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = wa * a.v[i] + (1.0 - wa) * b.v[i];
  return out;
}

// Perturbation confined to the protected low band: tests spectrally skewed
// differences rather than white noise.
Tensor low_band_bump(const Tensor& t, double amp, uint64_t seed) {
  Rng rng(seed);
  Tensor noise = t;
  for (double& v : noise.v) v = rng.uniform(-amp, amp);
  const FrequencyMask lo = build_mask(t.h, t.w, Band::kLow, 0.1);
  return t + truncate(noise, lo);
}

Image finish(Tensor t) { return quantize8(make_image(clip01_tensor(std::move(t)))); }

void add(std::vector<ReferencePair>& out, const std::string& name, Tensor a,
         Tensor b) {
  out.push_back(ReferencePair{name, finish(std::move(a)), finish(std::move(b))});
}

}  // namespace

std::vector<ReferencePair> reference_pairs() {
  std::vector<ReferencePair> out;
  const double k = 1.0 / 255.0;

  // 176x176: every scale of the 5-scale pyramid stays even until the last.
  const Tensor g1 = base(176, 176, 1, 901);
  add(out, "g176-noise4", g1, add_noise(g1, 4 * k, 1));
  add(out, "g176-noise8", g1, add_noise(g1, 8 * k, 2));
  add(out, "g176-noise16", g1, add_noise(g1, 16 * k, 3));
  add(out, "g176-noise48", g1, add_noise(g1, 48 * k, 4));
  add(out, "g176-contrast092", g1, contrast(g1, 0.92));
  add(out, "g176-shift10", g1, shift(g1, 10 * k));
  add(out, "g176-checker8", g1, checkerboard(g1, 8 * k));
  add(out, "g176-box3", g1, box3(g1));

  const Tensor g2 = base(192, 256, 1, 902);
  add(out, "g192x256-noise16", g2, add_noise(g2, 16 * k, 5));
  add(out, "g192x256-blend75", g2, blend(g2, base(192, 256, 1, 903), 0.75));
  add(out, "g192x256-other", g2, base(192, 256, 1, 904));
  add(out, "g192x256-lowband12", g2, low_band_bump(g2, 12 * k, 6));
  add(out, "g192x256-checker16", g2, checkerboard(g2, 16 * k));

  const Tensor c1 = base(176, 176, 3, 905);
  add(out, "rgb176-noise4", c1, add_noise(c1, 4 * k, 7));
  add(out, "rgb176-noise24", c1, add_noise(c1, 24 * k, 8));
  add(out, "rgb176-contrast085", c1, contrast(c1, 0.85));
  add(out, "rgb176-checker8", c1, checkerboard(c1, 8 * k));

  const Tensor c2 = base(192, 256, 3, 906);
  add(out, "rgb192x256-noise16", c2, add_noise(c2, 16 * k, 9));
  add(out, "rgb192x256-box3", c2, box3(c2));
  add(out, "rgb192x256-shiftnoise", c2, add_noise(shift(c2, -12 * k), 8 * k, 10));

  return out;
}

}  // namespace licattack::testing
