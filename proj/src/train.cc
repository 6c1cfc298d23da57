#include "train.h"

#include <cmath>
#include <cstdio>

#include "error.h"

namespace licattack {

namespace {

Tensor crop_tensor(const Tensor& t, int y0, int x0, int size) {
  Tensor out(t.c, size, size);
  for (int c = 0; c < t.c; ++c)
    for (int y = 0; y < size; ++y) {
      const double* src = t.plane(c) + static_cast<size_t>(y0 + y) * t.w + x0;
      double* dst = out.plane(c) + static_cast<size_t>(y) * size;
      std::copy(src, src + size, dst);
    }
  return out;
}

Tensor sample_crop(const std::vector<Image>& corpus, int crop, Rng& rng) {
  const Image& img = corpus[rng.below(static_cast<uint32_t>(corpus.size()))];
  const int y0 = static_cast<int>(rng.below(static_cast<uint32_t>(img.px.h - crop + 1)));
  const int x0 = static_cast<int>(rng.below(static_cast<uint32_t>(img.px.w - crop + 1)));
  return crop_tensor(img.px, y0, x0, crop);
}

// Deterministic eval on a fixed set of crops through the hard quantizer;
// this is what "training MSE decreased" means here.
double eval_mse(const CodecModel& model, const std::vector<Tensor>& crops) {
  double total = 0.0;
  for (const Tensor& x : crops) {
    const Tensor recon = model.reconstruct(x, QuantizerMode::kHard);
    total += frobenius_sq_diff(x, recon) / static_cast<double>(x.size());
  }
  return total / static_cast<double>(crops.size());
}

}  // namespace

TrainStats train_codec(CodecModel& model, const std::vector<Image>& corpus,
                       const TrainOptions& opt) {
  require(!corpus.empty(), ErrorCode::kValidation, "training corpus is empty");
  require(opt.steps >= 0, ErrorCode::kValidation, "steps must be >= 0");
  require(opt.batch >= 1, ErrorCode::kValidation, "batch must be >= 1");
  require(opt.lr > 0.0, ErrorCode::kValidation, "learning rate must be > 0");

  const int stride = model.stride();
  int unit = stride;
  if (model.arch().family == "hyperprior") unit *= 2;
  require(opt.crop >= unit && opt.crop % unit == 0, ErrorCode::kValidation,
          "crop size " + std::to_string(opt.crop) +
              " must be a positive multiple of " + std::to_string(unit) +
              " for architecture " + model.arch().id());
  for (const Image& img : corpus)
    require(img.px.h >= opt.crop && img.px.w >= opt.crop &&
                img.px.c == model.arch().in_ch,
            ErrorCode::kValidation,
            "corpus image smaller than the training crop or wrong channel "
            "count");

  Rng crop_rng(Rng::derive(opt.seed, 0x43524f50));  // crop sampling stream
  Rng noise_rng(Rng::derive(opt.seed, 0x4e4f4953));  // quantizer noise stream
  Rng eval_rng(Rng::derive(opt.seed, 0x4556414c));  // fixed eval crops

  std::vector<Tensor> eval_crops;
  const int n_eval = std::min<int>(8, static_cast<int>(corpus.size()) * 2);
  for (int i = 0; i < n_eval; ++i)
    eval_crops.push_back(sample_crop(corpus, opt.crop, eval_rng));

  TrainStats stats;
  stats.initial_mse = eval_mse(model, eval_crops);
  stats.final_mse = stats.initial_mse;

  if (opt.steps == 0) return stats;

  auto params = model.params();
  nn::Adam adam(opt.lr);

  for (int step = 0; step < opt.steps; ++step) {
    // Cosine decay to 10% of the base rate; short runs benefit from the
    // smaller late-stage steps.
    const double frac = static_cast<double>(step) / opt.steps;
    adam.set_lr(opt.lr * (0.1 + 0.9 * 0.5 * (1.0 + std::cos(M_PI * frac))));
    for (nn::Param* p : params) p->zero_grad();

    double loss = 0.0, mse = 0.0, bpp = 0.0;
    for (int b = 0; b < opt.batch; ++b) {
      const Tensor x = sample_crop(corpus, opt.crop, crop_rng);
      const TrainStepResult r = model.train_forward_backward(x, noise_rng);
      loss += r.loss;
      mse += r.mse;
      bpp += r.bpp;
    }
    const double inv_b = 1.0 / opt.batch;
    loss *= inv_b;
    mse *= inv_b;
    bpp *= inv_b;
    nn::scale_grads(params, inv_b);

    require(std::isfinite(loss), ErrorCode::kTraining,
            "training diverged (non-finite loss) at step " +
                std::to_string(step));

    if (opt.clip_norm > 0.0) {
      const double norm = nn::global_grad_norm(params);
      if (norm > opt.clip_norm) nn::scale_grads(params, opt.clip_norm / norm);
    }
    adam.step(params);

    stats.steps_run = step + 1;
    stats.final_loss = loss;
    stats.final_bpp = bpp;
    if (opt.log_every > 0 && (step + 1) % opt.log_every == 0)
      std::printf("step %5d  loss %.4f  mse %.6f  bpp %.4f\n", step + 1, loss,
                  mse, bpp);
  }

  stats.final_mse = eval_mse(model, eval_crops);
  return stats;
}

}  // namespace licattack
