#pragma once

#include <vector>

#include "codec.h"
#include "image.h"

namespace licattack {

struct TrainOptions {
  int steps = 1200;
  uint64_t seed = 1;
  int crop = 96;          // training patch edge, must suit the model stride
  int batch = 2;          // patches averaged per optimizer step
  double lr = 1e-3;
  double clip_norm = 5.0;  // global gradient-norm clip, <= 0 disables
  int log_every = 0;       // 0 = silent, otherwise print every N steps
};

struct TrainStats {
  int steps_run = 0;
  double initial_mse = 0.0;  // hard-quantizer eval MSE before any update
  double final_mse = 0.0;    // same protocol after the last step
  double final_loss = 0.0;   // last training loss (noise quantizer)
  double final_bpp = 0.0;
};

// Rate-distortion training on random crops of `corpus`, deterministic given
// opt.seed. The model's own lambda sets the quality level. Throws a training
// error naming the step index if the loss goes non-finite.
TrainStats train_codec(CodecModel& model, const std::vector<Image>& corpus,
                       const TrainOptions& opt);

}  // namespace licattack
