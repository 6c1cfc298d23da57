#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "metrics.h"
#include "msssim_pairs.h"
#include "msssim_reference.h"
#include "rng.h"
#include "test_util.h"

using namespace licattack;
using testing::random_tensor;

namespace {

Tensor uniform_offset(const Tensor& a, double d) {
  Tensor b = a;
  for (double& v : b.v) v += d;
  return b;
}

}  // namespace

TEST_CASE("psnr matches the closed form for uniform offsets") {
  Rng rng(21);
  // Pixels kept away from 1.0 so adding the offset cannot clip.
  const Tensor a = random_tensor(3, 32, 32, rng, 0.0, 0.5);
  for (int levels : {1, 4, 16, 100}) {
    const double d = levels / 255.0;
    const double expect = 20.0 * std::log10(255.0 / levels);
    CHECK(std::abs(psnr(a, uniform_offset(a, d)) - expect) < 1e-9);
  }
}

TEST_CASE("psnr is symmetric and capped at 100 dB for identical input") {
  Rng rng(22);
  const Tensor a = random_tensor(1, 40, 40, rng);
  const Tensor b = random_tensor(1, 40, 40, rng);
  CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)).epsilon(1e-12));
  CHECK(psnr(a, a) == 100.0);
}

TEST_CASE("psnr equals 10*log10(1/mse) on the unit scale") {
  Rng rng(23);
  const Tensor a = random_tensor(2, 24, 24, rng);
  Tensor b = a;
  b.at(0, 0, 0) += 0.25;  // exactly one differing sample
  const double mse = 0.25 * 0.25 / static_cast<double>(a.size());
  CHECK(psnr(a, b) == doctest::Approx(-10.0 * std::log10(mse)).epsilon(1e-12));
}

TEST_CASE("ms_ssim of an image with itself is 1") {
  Rng rng(24);
  const Tensor a = random_tensor(3, 176, 176, rng);
  CHECK(std::abs(ms_ssim(a, a) - 1.0) < 1e-9);
  const Tensor g = random_tensor(1, 196, 260, rng);
  CHECK(std::abs(ms_ssim(g, g) - 1.0) < 1e-9);
}

TEST_CASE("ms_ssim is symmetric and below 1 for perturbed input") {
  Rng rng(25);
  const Tensor a = random_tensor(1, 176, 176, rng);
  Tensor b = a;
  Rng noise(26);
  for (double& v : b.v) v += noise.uniform(-0.05, 0.05);
  const double ab = ms_ssim(a, b);
  CHECK(ab == doctest::Approx(ms_ssim(b, a)).epsilon(1e-12));
  CHECK(ab < 1.0);
  CHECK(ab > 0.0);
}

TEST_CASE("ms_ssim scale count follows the size rules") {
  CHECK(ms_ssim_scales(512, 768) == 5);
  CHECK(ms_ssim_scales(176, 176) == 5);
  CHECK(ms_ssim_scales(161, 161) == 5);
  CHECK(ms_ssim_scales(160, 300) == 4);  // limited by the smaller side
  CHECK(ms_ssim_scales(81, 81) == 4);
  CHECK(ms_ssim_scales(41, 41) == 3);
  CHECK(ms_ssim_scales(32, 32) == 2);
  CHECK(ms_ssim_scales(11, 11) == 1);
  CHECK(ms_ssim_scales(10, 200) == 0);
}

TEST_CASE("ms_ssim rejects images smaller than one window") {
  Rng rng(27);
  const Tensor a = random_tensor(1, 10, 10, rng);
  CHECK_THROWS_AS(ms_ssim(a, a), Error);
}

TEST_CASE("identical channels reproduce the grayscale score") {
  Rng rng(28);
  const Tensor g = random_tensor(1, 176, 176, rng);
  Tensor g2 = g;
  Rng noise(29);
  for (double& v : g2.v) v += noise.uniform(-0.03, 0.03);
  Tensor rgb(3, 176, 176), rgb2(3, 176, 176);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 176 * 176; ++i) {
      rgb.plane(c)[i] = g.plane(0)[i];
      rgb2.plane(c)[i] = g2.plane(0)[i];
    }
  CHECK(ms_ssim(rgb, rgb2) == doctest::Approx(ms_ssim(g, g2)).epsilon(1e-12));
}

TEST_CASE("ms_ssim agrees with the frozen TensorFlow references") {
  const auto pairs = testing::reference_pairs();
  REQUIRE(pairs.size() == std::size(testing::kMsssimReferences));
  for (const auto& ref : testing::kMsssimReferences) {
    bool found = false;
    for (const auto& p : pairs) {
      if (p.name != ref.name) continue;
      found = true;
      const double mine = ms_ssim(p.a.px, p.b.px);
      INFO(ref.name, ": tf=", ref.tf_value, " mine=", mine);
      CHECK(std::abs(mine - ref.tf_value) < testing::kMsssimAgreementTol);
    }
    CHECK_MESSAGE(found, ref.name);
  }
}

TEST_CASE("degradation returns the Table-1 style deltas") {
  const QualityScore ae{22.47, 0.9112};
  const QualityScore recon{7.500, 0.2188};
  const Degradation d = degradation(ae, recon);
  CHECK(d.d_psnr == doctest::Approx(14.97).epsilon(1e-12));
  CHECK(d.d_ms_ssim == doctest::Approx(0.6924).epsilon(1e-3));
}

TEST_CASE("quality() runs the metric pair on images") {
  Rng rng(30);
  const Image a = make_image(random_tensor(3, 176, 176, rng));
  Image b = a;
  b.px.at(0, 5, 5) += 0.1;
  const QualityScore q = quality(a, b);
  CHECK(q.psnr == doctest::Approx(psnr(a.px, b.px)).epsilon(1e-12));
  CHECK(q.ms_ssim == doctest::Approx(ms_ssim(a.px, b.px)).epsilon(1e-12));
}
