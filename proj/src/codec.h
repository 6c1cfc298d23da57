#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nn.h"
#include "quantizer.h"
#include "tensor.h"

namespace licattack {

// Architecture identifier, e.g. "factorized-d4n24m32c3" (d = downsampling
// conv layers, n = hidden channels, m = latent channels, c = image channels)
// or "hyperprior-d4n24m32c3h16" (h = hyper-latent channels).
struct ArchSpec {
  std::string family = "factorized";
  int depth = 4;
  int hidden = 24;
  int latent = 32;
  int in_ch = 3;
  int hyper = 16;

  int stride() const { return 1 << depth; }
  std::string id() const;
  static ArchSpec parse(const std::string& id);
};

struct TrainStepResult {
  double loss = 0.0;
  double mse = 0.0;
  double bpp = 0.0;
};

// Differentiable surrogate of an learned-image-compression pipeline:
// reconstruct(x) = decoder(Q(encoder(x))). Entropy coding never happens;
// a rate proxy estimates bits during training only.
class CodecModel {
 public:
  virtual ~CodecModel() = default;

  virtual const ArchSpec& arch() const = 0;
  virtual double lambda() const = 0;
  virtual uint64_t seed() const = 0;
  int stride() const { return arch().stride(); }

  // Encoder half g_a (no quantization) and decoder half g_s. Useful for
  // latent inspection and for gradient checks that freeze the quantizer.
  virtual Tensor encode(const Tensor& x) const = 0;
  virtual Tensor decode(const Tensor& latent) const = 0;

  // Forward through encoder, quantizer, decoder. Output is raw decoder
  // activations, deliberately unclipped. noise_seed feeds the kNoise mode.
  virtual Tensor reconstruct(const Tensor& x, QuantizerMode mode,
                             uint64_t noise_seed = 0) const = 0;

  // Forward plus vector-Jacobian product: returns d(loss)/dx. The upstream
  // gradient usually depends on the reconstruction (e.g. 2(x - recon)), so it
  // is supplied as a function of it; the forward pass runs exactly once.
  // Parameters are treated as constants.
  using UpstreamFn = std::function<Tensor(const Tensor& recon)>;
  virtual Tensor reconstruct_vjp(const Tensor& x, QuantizerMode mode,
                                 uint64_t noise_seed, const UpstreamFn& upstream,
                                 Tensor* recon_out) const = 0;

  // Training surface: one sample forward+backward accumulating parameter
  // gradients of rate + lambda*255^2*mse. Noise quantization during training.
  virtual TrainStepResult train_forward_backward(const Tensor& x, Rng& rng) = 0;
  virtual std::vector<nn::Param*> params() = 0;

  virtual void set_lambda(double l) = 0;
  virtual void set_seed(uint64_t s) = 0;
};

// Factory: fresh model with seeded parameter init.
std::unique_ptr<CodecModel> make_codec(const ArchSpec& arch, double lambda,
                                       uint64_t seed);

void check_stride_compatible(const CodecModel& model, const Tensor& x);

Tensor codec_forward(const CodecModel& model, const Tensor& x,
                     QuantizerMode mode, uint64_t noise_seed = 0);

// Checkpoint: magic, format version, arch id, lambda, seed, parameter blob.
void save_checkpoint(CodecModel& model, const std::string& path);
std::unique_ptr<CodecModel> load_checkpoint(const std::string& path);

}  // namespace licattack
