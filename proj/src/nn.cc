#include "nn.h"

#include <Eigen/Dense>

#include <cmath>

namespace licattack {
namespace nn {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

// Gathers k*k patches of `src` into a (c*k*k) x (gh*gw) matrix, where grid
// position (gy,gx) reads src at (gy*stride - pad + ky, gx*stride - pad + kx).
// The same geometry serves Conv2d forward and ConvTranspose2d backward.
Mat im2col(const Tensor& src, int kernel, int stride, int pad, int gh, int gw) {
  Mat col = Mat::Zero(static_cast<Eigen::Index>(src.c) * kernel * kernel,
                      static_cast<Eigen::Index>(gh) * gw);
  for (int ci = 0; ci < src.c; ++ci) {
    const double* plane = src.plane(ci);
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const int row = (ci * kernel + ky) * kernel + kx;
        double* dst = col.row(row).data();
        for (int gy = 0; gy < gh; ++gy) {
          const int sy = gy * stride - pad + ky;
          if (sy < 0 || sy >= src.h) continue;
          const double* src_row = plane + static_cast<size_t>(sy) * src.w;
          double* dst_row = dst + static_cast<size_t>(gy) * gw;
          for (int gx = 0; gx < gw; ++gx) {
            const int sx = gx * stride - pad + kx;
            if (sx >= 0 && sx < src.w) dst_row[gx] = src_row[sx];
          }
        }
      }
    }
  }
  return col;
}

// Scatter-add inverse of im2col.
Tensor col2im(const Mat& col, int c, int h, int w, int kernel, int stride,
              int pad, int gh, int gw) {
  Tensor out(c, h, w);
  for (int ci = 0; ci < c; ++ci) {
    double* plane = out.plane(ci);
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const int row = (ci * kernel + ky) * kernel + kx;
        const double* src = col.row(row).data();
        for (int gy = 0; gy < gh; ++gy) {
          const int sy = gy * stride - pad + ky;
          if (sy < 0 || sy >= h) continue;
          double* dst_row = plane + static_cast<size_t>(sy) * w;
          const double* src_row = src + static_cast<size_t>(gy) * gw;
          for (int gx = 0; gx < gw; ++gx) {
            const int sx = gx * stride - pad + kx;
            if (sx >= 0 && sx < w) dst_row[sx] += src_row[gx];
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad)
    : w(name + ".w", static_cast<size_t>(out_ch) * in_ch * kernel * kernel),
      b(name + ".b", static_cast<size_t>(out_ch)),
      in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad) {}

Tensor Conv2d::forward(const Tensor& x) const {
  require(x.c == in_ch_, ErrorCode::kValidation, "conv: channel mismatch");
  const int oh = out_dim(x.h), ow = out_dim(x.w);
  require(oh > 0 && ow > 0, ErrorCode::kValidation, "conv: input too small");
  const Mat col = im2col(x, kernel_, stride_, pad_, oh, ow);
  ConstMatMap wm(w.value.data(), out_ch_, static_cast<Eigen::Index>(in_ch_) * kernel_ * kernel_);

  Tensor y(out_ch_, oh, ow);
  MatMap ym(y.v.data(), out_ch_, static_cast<Eigen::Index>(oh) * ow);
  ym.noalias() = wm * col;
  for (int oc = 0; oc < out_ch_; ++oc) ym.row(oc).array() += b.value[oc];
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy, bool param_grads) {
  const int oh = out_dim(x.h), ow = out_dim(x.w);
  ConstMatMap dym(dy.v.data(), out_ch_, static_cast<Eigen::Index>(oh) * ow);
  ConstMatMap wm(w.value.data(), out_ch_, static_cast<Eigen::Index>(in_ch_) * kernel_ * kernel_);

  if (param_grads) {
    const Mat col = im2col(x, kernel_, stride_, pad_, oh, ow);
    MatMap dwm(w.grad.data(), out_ch_, static_cast<Eigen::Index>(in_ch_) * kernel_ * kernel_);
    dwm.noalias() += dym * col.transpose();
    for (int oc = 0; oc < out_ch_; ++oc) b.grad[oc] += dym.row(oc).sum();
  }

  const Mat dcol = wm.transpose() * dym;
  return col2im(dcol, in_ch_, x.h, x.w, kernel_, stride_, pad_, oh, ow);
}

ConvTranspose2d::ConvTranspose2d(std::string name, int in_ch, int out_ch, int kernel,
                                 int stride, int pad, int out_pad)
    : w(name + ".w", static_cast<size_t>(in_ch) * out_ch * kernel * kernel),
      b(name + ".b", static_cast<size_t>(out_ch)),
      in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride),
      pad_(pad), out_pad_(out_pad) {}

Tensor ConvTranspose2d::forward(const Tensor& x) const {
  require(x.c == in_ch_, ErrorCode::kValidation, "convT: channel mismatch");
  const int oh = out_dim(x.h), ow = out_dim(x.w);
  ConstMatMap wm(w.value.data(), in_ch_, static_cast<Eigen::Index>(out_ch_) * kernel_ * kernel_);
  ConstMatMap xm(x.v.data(), in_ch_, static_cast<Eigen::Index>(x.h) * x.w);

  const Mat col = wm.transpose() * xm;  // (out_ch*k*k) x (h*w)
  Tensor y = col2im(col, out_ch_, oh, ow, kernel_, stride_, pad_, x.h, x.w);
  for (int oc = 0; oc < out_ch_; ++oc) {
    double* plane = y.plane(oc);
    const size_t n = static_cast<size_t>(oh) * ow;
    for (size_t i = 0; i < n; ++i) plane[i] += b.value[oc];
  }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& x, const Tensor& dy, bool param_grads) {
  const Mat col_dy = im2col(dy, kernel_, stride_, pad_, x.h, x.w);
  ConstMatMap wm(w.value.data(), in_ch_, static_cast<Eigen::Index>(out_ch_) * kernel_ * kernel_);

  if (param_grads) {
    ConstMatMap xm(x.v.data(), in_ch_, static_cast<Eigen::Index>(x.h) * x.w);
    MatMap dwm(w.grad.data(), in_ch_, static_cast<Eigen::Index>(out_ch_) * kernel_ * kernel_);
    dwm.noalias() += xm * col_dy.transpose();
    const size_t n = static_cast<size_t>(dy.h) * dy.w;
    for (int oc = 0; oc < out_ch_; ++oc) {
      const double* plane = dy.plane(oc);
      double s = 0.0;
      for (size_t i = 0; i < n; ++i) s += plane[i];
      b.grad[oc] += s;
    }
  }

  Tensor dx(in_ch_, x.h, x.w);
  MatMap dxm(dx.v.data(), in_ch_, static_cast<Eigen::Index>(x.h) * x.w);
  dxm.noalias() = wm * col_dy;
  return dx;
}

Tensor silu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.v) v = v * sigmoid(v);
  return y;
}

Tensor silu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  for (size_t i = 0; i < x.v.size(); ++i) {
    const double s = sigmoid(x.v[i]);
    dx.v[i] *= s * (1.0 + x.v[i] * (1.0 - s));
  }
  return dx;
}

void Adam::step(std::vector<Param*>& params) {
  if (m_.empty()) {
    for (Param* p : params) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = *params[pi];
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m_[pi][i] = beta1_ * m_[pi][i] + (1.0 - beta1_) * g;
      v_[pi][i] = beta2_ * v_[pi][i] + (1.0 - beta2_) * g * g;
      const double mhat = m_[pi][i] / bc1;
      const double vhat = v_[pi][i] / bc2;
      p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

double global_grad_norm(const std::vector<Param*>& params) {
  double sq = 0.0;
  for (const Param* p : params)
    for (double g : p->grad) sq += g * g;
  return std::sqrt(sq);
}

void scale_grads(std::vector<Param*>& params, double factor) {
  for (Param* p : params)
    for (double& g : p->grad) g *= factor;
}

}  // namespace nn
}  // namespace licattack
