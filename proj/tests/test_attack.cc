#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "attack.h"
#include "dataset.h"
#include "identity_codec.h"
#include "rng.h"
#include "test_util.h"

using namespace licattack;
using testing::IdentityCodec;
using testing::max_abs_diff;
using testing::random_tensor;

namespace {

Image flat_image(int c, int size, double value) {
  Tensor t(c, size, size);
  std::fill(t.v.begin(), t.v.end(), value);
  return make_image(std::move(t));
}

// Max 8-bit level difference between two images on the [0,1] scale.
long level_diff(const Image& a, const Image& b) {
  long worst = 0;
  for (size_t i = 0; i < a.px.v.size(); ++i) {
    const long la = std::lround(a.px.v[i] * 255.0);
    const long lb = std::lround(b.px.v[i] * 255.0);
    worst = std::max(worst, std::labs(la - lb));
  }
  return worst;
}

}  // namespace

TEST_CASE("identity codec saturates the L-inf ball coordinate-wise") {
  IdentityCodec codec(3);
  const Image x = flat_image(3, 32, 0.5);  // interior: pixel clamp never binds

  AttackConfig cfg;
  cfg.eps = 32.0;
  cfg.steps = 100;
  cfg.ic_enabled = false;
  cfg.init = InitMode::kRandom;  // sign(0)=0, so zero init would stay put
  cfg.seed = 3;

  const AttackResult res = pgd_attack(x, codec, cfg);
  const double budget = 32.0 / 255.0;
  for (double d : res.delta.v) CHECK(std::abs(std::abs(d) - budget) < 1e-6);
  CHECK(res.final_loss ==
        doctest::Approx(-3.0 * 32 * 32 * budget * budget).epsilon(1e-9));
  CHECK(res.trace.size() == 101);
  CHECK(res.steps_executed == 100);
}

TEST_CASE("zero init on a flat objective stays at zero") {
  // At delta=0 both gradient terms vanish (IC has a zero subgradient at its
  // kink) and sign(0)=0 freezes every coordinate.
  IdentityCodec codec(1);
  const Image x = flat_image(1, 32, 0.5);
  AttackConfig cfg;
  cfg.eps = 16.0;
  cfg.steps = 10;
  cfg.eta = 1e6;
  cfg.init = InitMode::kZero;
  const AttackResult res = pgd_attack(x, codec, cfg);
  CHECK(max_abs(res.delta) == 0.0);
  CHECK(res.best_step == 0);
  CHECK(res.final_loss == 0.0);
  for (const TracePoint& pt : res.trace) CHECK(pt.total == 0.0);
  CHECK(level_diff(res.x_adv_8bit, quantize8(x)) == 0);
}

TEST_CASE("eps=0 and steps=0 are exact no-ops") {
  IdentityCodec codec(3);
  const Image x = synth_image(32, 32, 9);

  for (int variant = 0; variant < 2; ++variant) {
    AttackConfig cfg;
    cfg.eps = variant == 0 ? 0.0 : 32.0;
    cfg.steps = variant == 0 ? 50 : 0;
    cfg.init = InitMode::kRandom;  // must still collapse to zero
    const AttackResult res = pgd_attack(x, codec, cfg);
    CHECK(max_abs(res.delta) == 0.0);
    CHECK(res.trace.size() == 1);
    CHECK(res.steps_executed == 0);
    CHECK(res.best_step == 0);
    CHECK(level_diff(res.x_adv_8bit, quantize8(x)) == 0);
  }
}

TEST_CASE("saved 8-bit pair respects the level budget, fractional eps too") {
  const Image x = synth_image(32, 32, 10);
  auto model = make_codec(ArchSpec::parse("factorized-d1n4m6c3"), 0.0130, 5);

  for (double eps : {7.0, 10.7, 32.0}) {
    CAPTURE(eps);
    AttackConfig cfg;
    cfg.eps = eps;
    cfg.steps = 20;
    cfg.init = InitMode::kRandom;
    cfg.seed = 11;
    const AttackResult res = pgd_attack(x, *model, cfg);
    CHECK(max_abs(res.delta) <= eps / 255.0 + 1e-12);
    // Originals are 8-bit quantized, so rounding cannot add a level.
    CHECK(level_diff(res.x_adv_8bit, quantize8(clip01(x))) <= std::llround(eps));
    // Every pixel of the adversarial image is a valid intensity.
    for (double v : res.x_adv.px.v) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("loss and gradient are affine in eta") {
  auto model = make_codec(ArchSpec::parse("factorized-d1n4m6c1"), 0.0130, 6);
  Rng rng(50);
  const Tensor x = random_tensor(1, 8, 8, rng, 0.1, 0.9);
  Tensor delta = random_tensor(1, 8, 8, rng, -0.05, 0.05);
  const FrequencyMask mask = build_mask(8, 8, Band::kLow, 0.5);

  Tensor g0, g1, g7;
  const TracePoint t0 =
      adv_loss(x, delta, *model, &mask, 0.0, QuantizerMode::kCubic, 0, &g0);
  const TracePoint t1 =
      adv_loss(x, delta, *model, &mask, 1.0, QuantizerMode::kCubic, 0, &g1);
  const TracePoint t7 =
      adv_loss(x, delta, *model, &mask, 7.0, QuantizerMode::kCubic, 0, &g7);

  CHECK(t0.distortion == t1.distortion);
  CHECK(t1.ic == t7.ic);
  CHECK(t1.ic > 0.0);
  CHECK(t7.total - t0.total ==
        doctest::Approx(7.0 * (t1.total - t0.total)).epsilon(1e-9));
  for (size_t i = 0; i < g0.v.size(); ++i) {
    const double predicted = g0.v[i] + 7.0 * (g1.v[i] - g0.v[i]);
    CHECK(g7.v[i] == doctest::Approx(predicted).epsilon(1e-9));
  }

  // eta=0 never needs a mask; a null mask with positive eta drops the term.
  Tensor gn;
  const TracePoint tn =
      adv_loss(x, delta, *model, nullptr, 5.0, QuantizerMode::kCubic, 0, &gn);
  CHECK(tn.ic == 0.0);
  CHECK(tn.total == -tn.distortion);
}

TEST_CASE("adv_loss gradient matches finite differences") {
  auto model = make_codec(ArchSpec::parse("factorized-d1n4m6c1"), 0.0130, 7);
  Rng rng(51);
  const Tensor x = random_tensor(1, 8, 8, rng, 0.1, 0.9);
  Tensor delta = random_tensor(1, 8, 8, rng, -0.05, 0.05);
  const FrequencyMask mask = build_mask(8, 8, Band::kLow, 0.5);
  const double eta = 3.0;
  const double fd_eps = 1e-6;

  Tensor grad;
  const TracePoint base = adv_loss(x, delta, *model, &mask, eta,
                                   QuantizerMode::kCubic, 0, &grad);
  CHECK(base.ic > 0.0);  // away from the IC kink, so FD is meaningful

  Rng pick(52);
  for (int t = 0; t < 12; ++t) {
    const size_t k = pick.below(static_cast<uint32_t>(delta.size()));
    const double save = delta.v[k];
    delta.v[k] = save + fd_eps;
    const double up = adv_loss(x, delta, *model, &mask, eta,
                               QuantizerMode::kCubic, 0, nullptr)
                          .total;
    delta.v[k] = save - fd_eps;
    const double dn = adv_loss(x, delta, *model, &mask, eta,
                               QuantizerMode::kCubic, 0, nullptr)
                          .total;
    delta.v[k] = save;
    const double fd = (up - dn) / (2.0 * fd_eps);
    const double denom = std::max({std::abs(fd), std::abs(grad.v[k]), 1e-4});
    CHECK(std::abs(grad.v[k] - fd) / denom < 1e-3);
  }
}

TEST_CASE("trace bookkeeping and best tracking") {
  const Image x = synth_image(32, 32, 12);
  auto model = make_codec(ArchSpec::parse("factorized-d2n6m8c3"), 0.0130, 8);

  AttackConfig cfg;
  cfg.eps = 24.0;
  cfg.steps = 30;
  cfg.eta = 10.0;
  cfg.init = InitMode::kRandom;
  cfg.seed = 21;

  const AttackResult best = pgd_attack(x, *model, cfg);
  CHECK(best.trace.size() == static_cast<size_t>(cfg.steps) + 1);
  CHECK(best.steps_executed == cfg.steps);
  double min_total = best.trace[0].total;
  for (const TracePoint& pt : best.trace) {
    CHECK(pt.total == doctest::Approx(-pt.distortion + cfg.eta * pt.ic)
                          .epsilon(1e-12));
    min_total = std::min(min_total, pt.total);
  }
  CHECK(best.final_loss == min_total);
  CHECK(best.trace[static_cast<size_t>(best.best_step)].total ==
        best.final_loss);
  CHECK(max_abs(best.delta) <= cfg.eps_norm() + 1e-12);

  AttackConfig last_cfg = cfg;
  last_cfg.best_tracking = false;
  const AttackResult last = pgd_attack(x, *model, last_cfg);
  CHECK(last.best_step == last.steps_executed);
  CHECK(last.final_loss == last.trace.back().total);
  CHECK(last.final_loss >= best.final_loss);  // best dominates by definition
}

TEST_CASE("attacks are deterministic in the config seed") {
  const Image x = synth_image(32, 32, 13);
  auto model = make_codec(ArchSpec::parse("factorized-d2n6m8c3"), 0.0130, 8);
  AttackConfig cfg;
  cfg.eps = 16.0;
  cfg.steps = 12;
  cfg.init = InitMode::kRandom;
  cfg.seed = 5;

  const AttackResult a = pgd_attack(x, *model, cfg);
  const AttackResult b = pgd_attack(x, *model, cfg);
  CHECK(a.delta.v == b.delta.v);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i)
    CHECK(a.trace[i].total == b.trace[i].total);
  CHECK(a.final_loss == b.final_loss);

  AttackConfig other = cfg;
  other.seed = 6;
  const AttackResult c = pgd_attack(x, *model, other);
  CHECK(a.delta.v != c.delta.v);
}

TEST_CASE("noise quantizer attacks are deterministic per seed") {
  const Image x = synth_image(32, 32, 14);
  auto model = make_codec(ArchSpec::parse("factorized-d2n6m8c3"), 0.0130, 8);
  AttackConfig cfg;
  cfg.eps = 16.0;
  cfg.steps = 4;
  cfg.quantizer = QuantizerMode::kNoise;
  cfg.seed = 9;
  const AttackResult a = pgd_attack(x, *model, cfg);
  const AttackResult b = pgd_attack(x, *model, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i)  // still deterministic per seed
    CHECK(a.trace[i].total == b.trace[i].total);
}

TEST_CASE("config validation rejects bad settings") {
  const Image x = flat_image(3, 32, 0.5);
  IdentityCodec codec(3);
  AttackConfig cfg;

  auto expect_validation = [&](AttackConfig c) {
    try {
      pgd_attack(x, codec, c);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kValidation);
    }
  };

  AttackConfig bad = cfg;
  bad.eps = -1.0;
  expect_validation(bad);
  bad = cfg;
  bad.eta = -0.5;
  expect_validation(bad);
  bad = cfg;
  bad.steps = -1;
  expect_validation(bad);
  bad = cfg;
  bad.ic_fraction = 0.0;
  expect_validation(bad);
  bad = cfg;
  bad.ic_fraction = 1.5;
  expect_validation(bad);

  // Stride-incompatible image.
  auto deep = make_codec(ArchSpec::parse("factorized-d4n6m8c3"), 0.0130, 1);
  try {
    pgd_attack(flat_image(3, 40, 0.5), *deep, cfg);  // 40 % 16 != 0
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidation);
  }

  CHECK_THROWS_AS(init_from_string("gaussian"), Error);
  CHECK(init_from_string("random") == InitMode::kRandom);
  CHECK(init_to_string(InitMode::kZero) == "zero");
}

TEST_CASE("delta visualization normalizes or falls back to mid-gray") {
  Tensor zero(1, 32, 32);
  const Image flat = delta_visualization(zero);
  for (double v : flat.px.v) CHECK(v == 0.5);

  Rng rng(53);
  Tensor d = random_tensor(1, 32, 32, rng, -0.1, 0.1);
  d.v[0] = -0.1;  // pin the extremes
  d.v[1] = 0.1;
  const Image vis = delta_visualization(d);
  double lo = 1e9, hi = -1e9;
  for (double v : vis.px.v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == 0.0);
  CHECK(hi == 1.0);
}

TEST_CASE("project_linf clamps and validates") {
  Rng rng(54);
  const Tensor d = random_tensor(1, 8, 8, rng, -1.0, 1.0);
  const Tensor p = project_linf(d, 0.25);
  CHECK(max_abs(p) <= 0.25);
  for (size_t i = 0; i < d.v.size(); ++i)
    if (std::abs(d.v[i]) <= 0.25) CHECK(p.v[i] == d.v[i]);
  CHECK_THROWS_AS(project_linf(d, -0.1), Error);
}
