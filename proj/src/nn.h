#pragma once

#include <string>
#include <vector>

#include "tensor.h"

namespace licattack {
namespace nn {

struct Param {
  std::string name;
  std::vector<double> value;
  std::vector<double> grad;

  Param() = default;
  Param(std::string n, size_t size) : name(std::move(n)), value(size, 0.0), grad(size, 0.0) {}
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

// Strided 2-D convolution, layer-style: forward takes the input, backward
// takes the same input plus the upstream gradient and returns the input
// gradient. Parameter gradients accumulate into Param::grad only when
// requested (the attack path never needs them).
class Conv2d {
 public:
  Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad);

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy, bool param_grads);

  int out_dim(int in_dim) const { return (in_dim + 2 * pad_ - kernel_) / stride_ + 1; }
  int in_ch() const { return in_ch_; }
  int out_ch() const { return out_ch_; }

  Param w;  // [out_ch x in_ch*k*k]
  Param b;  // [out_ch]

 private:
  int in_ch_, out_ch_, kernel_, stride_, pad_;
};

// Transposed convolution (fractional stride upsampling); weight layout
// [in_ch x out_ch*k*k]. With kernel 5, stride 2, pad 2, output_pad 1 the
// spatial size doubles exactly.
class ConvTranspose2d {
 public:
  ConvTranspose2d(std::string name, int in_ch, int out_ch, int kernel, int stride,
                  int pad, int out_pad);

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy, bool param_grads);

  int out_dim(int in_dim) const {
    return (in_dim - 1) * stride_ - 2 * pad_ + kernel_ + out_pad_;
  }
  int in_ch() const { return in_ch_; }
  int out_ch() const { return out_ch_; }

  Param w;  // [in_ch x out_ch*k*k]
  Param b;  // [out_ch]

 private:
  int in_ch_, out_ch_, kernel_, stride_, pad_, out_pad_;
};

// SiLU (x * sigmoid(x)). Smooth everywhere, which keeps finite-difference
// gradient checks clean.
Tensor silu(const Tensor& x);
Tensor silu_backward(const Tensor& x, const Tensor& dy);

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

// Adam with bias correction; state lives in the optimizer, parameters are
// updated in place in registration order.
class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}
  void set_lr(double lr) { lr_ = lr; }
  void step(std::vector<Param*>& params);

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

double global_grad_norm(const std::vector<Param*>& params);
void scale_grads(std::vector<Param*>& params, double factor);

}  // namespace nn
}  // namespace licattack
