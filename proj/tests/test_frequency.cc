#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "brute_dct.h"
#include "dct.h"
#include "frequency.h"
#include "rng.h"
#include "test_util.h"

using namespace licattack;
using testing::brute_dct2;
using testing::brute_idct2;
using testing::max_abs_diff;
using testing::random_tensor;

TEST_CASE("dct2 matches the direct-sum oracle") {
  Rng rng(11);
  const int sizes[][2] = {{1, 1}, {1, 8}, {4, 4}, {5, 7}, {8, 8}, {16, 12}, {23, 17}};
  for (auto [h, w] : sizes) {
    const Tensor x = random_tensor(2, h, w, rng, -1.0, 1.0);
    CHECK(max_abs_diff(dct2(x), brute_dct2(x)) < 1e-9);
    CHECK(max_abs_diff(idct2(x), brute_idct2(x)) < 1e-9);
  }
}

TEST_CASE("dct2/idct2 roundtrip, 100 random images") {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const int h = 2 + static_cast<int>(rng.below(47));
    const int w = 2 + static_cast<int>(rng.below(47));
    const Tensor x = random_tensor(1 + static_cast<int>(rng.below(3)), h, w, rng);
    CHECK(max_abs_diff(idct2(dct2(x)), x) < 1e-6);
  }
}

TEST_CASE("Parseval: orthonormal transform preserves energy") {
  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    const int h = 3 + static_cast<int>(rng.below(60));
    const int w = 3 + static_cast<int>(rng.below(60));
    const Tensor x = random_tensor(3, h, w, rng, -2.0, 2.0);
    const double ex = frobenius_sq(x);
    const double ec = frobenius_sq(dct2(x));
    CHECK(std::abs(ex - ec) <= 1e-9 * std::max(ex, 1.0));
  }
}

TEST_CASE("mask: counts, ordering, 2x2 layout, complement") {
  SUBCASE("2x2 low half keeps DC and the (0,1) tie-winner") {
    const FrequencyMask m = build_mask(2, 2, Band::kLow, 0.5);
    CHECK(m.ones() == 2);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(0, 1) == 1);
    CHECK(m.at(1, 0) == 0);
    CHECK(m.at(1, 1) == 0);
  }
  SUBCASE("kept count is round(fraction * H * W)") {
    CHECK(build_mask(7, 9, Band::kLow, 0.5).ones() == 32);   // round(31.5)
    CHECK(build_mask(8, 8, Band::kLow, 0.25).ones() == 16);
    CHECK(build_mask(8, 8, Band::kHigh, 0.25).ones() == 16);
    CHECK(build_mask(5, 5, Band::kLow, 1.0).ones() == 25);
    CHECK_THROWS_AS(build_mask(5, 5, Band::kLow, 0.0), Error);  // (0,1] only
  }
  SUBCASE("high band is the exact complement of the low band") {
    const FrequencyMask lo = build_mask(6, 10, Band::kLow, 0.3);
    const FrequencyMask hi = build_mask(6, 10, Band::kHigh, 0.7);
    for (int u = 0; u < 6; ++u)
      for (int v = 0; v < 10; ++v) CHECK(lo.at(u, v) + hi.at(u, v) == 1);
    const FrequencyMask comp = lo.complement();
    for (int u = 0; u < 6; ++u)
      for (int v = 0; v < 10; ++v) CHECK(comp.at(u, v) == hi.at(u, v));
  }
  SUBCASE("low band never keeps a strictly higher frequency than it drops") {
    const FrequencyMask m = build_mask(8, 8, Band::kLow, 0.5);
    double max_kept = -1.0, min_dropped = 1e9;
    for (int u = 0; u < 8; ++u)
      for (int v = 0; v < 8; ++v) {
        const double f = u / 7.0 + v / 7.0;
        if (m.at(u, v)) max_kept = std::max(max_kept, f);
        else min_dropped = std::min(min_dropped, f);
      }
    CHECK(max_kept <= min_dropped + 1e-12);
  }
}

TEST_CASE("truncate: idempotent, complementary, linear") {
  Rng rng(14);
  const int sizes[][2] = {{8, 8}, {32, 24}, {64, 96}};
  for (auto [h, w] : sizes) {
    const FrequencyMask lo = build_mask(h, w, Band::kLow, 0.5);
    const FrequencyMask hi = lo.complement();
    const Tensor x = random_tensor(3, h, w, rng);
    const Tensor tx = truncate(x, lo);
    CHECK(max_abs_diff(truncate(tx, lo), tx) < 1e-9);
    CHECK(max_abs_diff(truncate(x, lo) + truncate(x, hi), x) < 1e-9);

    const Tensor y = random_tensor(3, h, w, rng);
    const Tensor lhs = truncate(2.5 * x - y, lo);
    const Tensor rhs = 2.5 * truncate(x, lo) - truncate(y, lo);
    CHECK(max_abs_diff(lhs, rhs) < 1e-9);
  }
}

TEST_CASE("truncate on 512x768 stays exact") {
  Rng rng(15);
  const FrequencyMask lo = build_mask(512, 768, Band::kLow, 0.5);
  const Tensor x = random_tensor(1, 512, 768, rng);
  const Tensor tx = truncate(x, lo);
  CHECK(max_abs_diff(truncate(tx, lo), tx) < 1e-9);
  CHECK(max_abs_diff(tx + truncate(x, lo.complement()), x) < 1e-9);
}

TEST_CASE("ic_loss: exact null and complement-band invisibility") {
  Rng rng(16);
  const int h = 24, w = 32;
  const FrequencyMask lo = build_mask(h, w, Band::kLow, 0.5);
  const Tensor x = random_tensor(3, h, w, rng);

  CHECK(ic_loss(x, x, lo) == 0.0);

  // Perturbation synthesized purely in the dropped band: invisible to T.
  Tensor coeffs(3, h, w);
  for (int c = 0; c < 3; ++c)
    for (int u = 0; u < h; ++u)
      for (int v = 0; v < w; ++v)
        coeffs.at(c, u, v) = lo.at(u, v) ? 0.0 : rng.uniform(-0.2, 0.2);
  const Tensor delta = idct2(coeffs);
  CHECK(ic_loss(x, x + delta, lo) < 1e-6);

  // The same perturbation is fully visible to the complementary operator.
  const double vis = ic_loss(x, x + delta, lo.complement());
  double expect = 0.0;
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    for (int u = 0; u < h; ++u)
      for (int v = 0; v < w; ++v) s += coeffs.at(c, u, v) * coeffs.at(c, u, v);
    expect += std::sqrt(s);
  }
  CHECK(std::abs(vis - expect) < 1e-9);
}

TEST_CASE("ic_loss value is the sum of per-channel low-band norms") {
  Rng rng(17);
  const int h = 16, w = 16;
  const FrequencyMask lo = build_mask(h, w, Band::kLow, 0.5);
  const Tensor x = random_tensor(2, h, w, rng);
  const Tensor y = random_tensor(2, h, w, rng);
  double expect = 0.0;
  const Tensor diff = truncate(x, lo) - truncate(y, lo);
  for (int c = 0; c < 2; ++c) {
    double s = 0.0;
    const double* p = diff.plane(c);
    for (int i = 0; i < h * w; ++i) s += p[i] * p[i];
    expect += std::sqrt(s);
  }
  CHECK(ic_loss(x, y, lo) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(ic_loss(x, y, lo) == doctest::Approx(ic_loss(y, x, lo)).epsilon(1e-12));
}

TEST_CASE("ic_loss_with_grad matches central finite differences") {
  Rng rng(18);
  const int h = 12, w = 10;
  const FrequencyMask lo = build_mask(h, w, Band::kLow, 0.5);
  const Tensor x = random_tensor(2, h, w, rng);
  Tensor y = random_tensor(2, h, w, rng);

  Tensor grad;
  const double base = ic_loss_with_grad(x, y, lo, &grad);
  CHECK(base == doctest::Approx(ic_loss(x, y, lo)).epsilon(1e-12));

  const double eps = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const size_t k = rng.below(static_cast<uint32_t>(y.size()));
    const double save = y.v[k];
    y.v[k] = save + eps;
    const double up = ic_loss(x, y, lo);
    y.v[k] = save - eps;
    const double dn = ic_loss(x, y, lo);
    y.v[k] = save;
    const double fd = (up - dn) / (2.0 * eps);
    CHECK(grad.v[k] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("ic_loss_with_grad returns the zero subgradient at the kink") {
  Rng rng(19);
  const Tensor x = random_tensor(1, 8, 8, rng);
  const FrequencyMask lo = build_mask(8, 8, Band::kLow, 0.5);
  Tensor grad;
  CHECK(ic_loss_with_grad(x, x, lo, &grad) == 0.0);
  CHECK(max_abs(grad) == 0.0);
}

TEST_CASE("band_from_string round-trips and rejects junk") {
  CHECK(band_from_string("low") == Band::kLow);
  CHECK(band_from_string("high") == Band::kHigh);
  CHECK(band_to_string(Band::kHigh) == "high");
  CHECK_THROWS_AS(band_from_string("mid"), Error);
}

TEST_CASE("build_mask validates its arguments") {
  CHECK_THROWS_AS(build_mask(0, 8, Band::kLow, 0.5), Error);
  CHECK_THROWS_AS(build_mask(8, 8, Band::kLow, -0.1), Error);
  CHECK_THROWS_AS(build_mask(8, 8, Band::kLow, 1.1), Error);
}
