#include "codec.h"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include "error.h"

namespace licattack {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kScaleFloor = 1e-6;

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// Raw parameter value whose softplus is 1.0; rate scales start there.
constexpr double kUnitScaleRaw = 0.5413248546129181;

// Bits of one latent element under a zero-mean logistic with width `s`,
// integrated over the unit quantization bin. Writes d(bits)/dv and
// d(bits)/ds when requested.
double logistic_bits_elem(double v, double s, double* dv, double* ds) {
  const double a = (v + 0.5) / s, b = (v - 0.5) / s;
  const double sa = nn::sigmoid(a), sb = nn::sigmoid(b);
  double p = sa - sb;
  if (p < 1e-12) {
    p = 1e-12;
    if (dv) *dv = 0.0;
    if (ds) *ds = 0.0;
    return -std::log2(p);
  }
  const double da = sa * (1.0 - sa), db = sb * (1.0 - sb);
  if (dv) *dv = -((da - db) / s) / (p * kLn2);
  if (ds) *ds = -((-a * da + b * db) / s) / (p * kLn2);
  return -std::log2(p);
}

// Per-latent-channel logistic widths: the factorized entropy proxy.
struct RateProxy {
  nn::Param p;

  RateProxy(std::string name, int channels) : p(std::move(name), channels) {
    std::fill(p.value.begin(), p.value.end(), kUnitScaleRaw);
  }

  double bits(const Tensor& y) const {
    double total = 0.0;
    for (int ci = 0; ci < y.c; ++ci) {
      const double s = softplus(p.value[ci]) + kScaleFloor;
      const double* plane = y.plane(ci);
      const size_t n = static_cast<size_t>(y.h) * y.w;
      for (size_t i = 0; i < n; ++i)
        total += logistic_bits_elem(plane[i], s, nullptr, nullptr);
    }
    return total;
  }

  // Adds upstream * d(bits)/dy into dy and accumulates parameter grads.
  double bits_backward(const Tensor& y, double upstream, Tensor* dy) {
    double total = 0.0;
    for (int ci = 0; ci < y.c; ++ci) {
      const double s = softplus(p.value[ci]) + kScaleFloor;
      const double ds_dp = nn::sigmoid(p.value[ci]);
      const double* plane = y.plane(ci);
      double* gplane = dy->plane(ci);
      const size_t n = static_cast<size_t>(y.h) * y.w;
      double gs = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double dv = 0.0, dsc = 0.0;
        total += logistic_bits_elem(plane[i], s, &dv, &dsc);
        gplane[i] += upstream * dv;
        gs += dsc;
      }
      p.grad[ci] += upstream * gs * ds_dp;
    }
    return total;
  }
};

struct StackTrace {
  std::vector<Tensor> in;   // input to each layer
  std::vector<Tensor> pre;  // layer output before activation
};

}  // namespace

std::string ArchSpec::id() const {
  std::string s = family + "-d" + std::to_string(depth) + "n" +
                  std::to_string(hidden) + "m" + std::to_string(latent) + "c" +
                  std::to_string(in_ch);
  if (family == "hyperprior") s += "h" + std::to_string(hyper);
  return s;
}

ArchSpec ArchSpec::parse(const std::string& id) {
  ArchSpec a;
  const size_t dash = id.find('-');
  require(dash != std::string::npos, ErrorCode::kFormat,
          "bad architecture id: " + id);
  a.family = id.substr(0, dash);
  require(a.family == "factorized" || a.family == "hyperprior",
          ErrorCode::kFormat, "unknown architecture family: " + a.family);

  size_t i = dash + 1;
  while (i < id.size()) {
    const char key = id[i++];
    size_t j = i;
    while (j < id.size() && std::isdigit(static_cast<unsigned char>(id[j]))) ++j;
    require(j > i, ErrorCode::kFormat, "bad architecture id: " + id);
    const int val = std::stoi(id.substr(i, j - i));
    switch (key) {
      case 'd': a.depth = val; break;
      case 'n': a.hidden = val; break;
      case 'm': a.latent = val; break;
      case 'c': a.in_ch = val; break;
      case 'h': a.hyper = val; break;
      default:
        fail(ErrorCode::kFormat, std::string("bad architecture key '") + key +
                                     "' in: " + id);
    }
    i = j;
  }
  require(a.depth >= 1 && a.depth <= 6 && a.hidden >= 1 && a.latent >= 1 &&
              (a.in_ch == 1 || a.in_ch == 3),
          ErrorCode::kFormat, "architecture out of range: " + id);
  return a;
}

void check_stride_compatible(const CodecModel& model, const Tensor& x) {
  require(x.c == model.arch().in_ch, ErrorCode::kValidation,
          "codec: image has " + std::to_string(x.c) + " channels, model wants " +
              std::to_string(model.arch().in_ch));
  const int s = model.stride();
  require(x.h % s == 0 && x.w % s == 0, ErrorCode::kValidation,
          "codec: dimensions " + std::to_string(x.h) + "x" + std::to_string(x.w) +
              " not divisible by stride " + std::to_string(s) +
              " (no implicit padding)");
}

namespace {

class FactorizedCodec : public CodecModel {
 public:
  FactorizedCodec(const ArchSpec& arch, double lambda, uint64_t seed)
      : arch_(arch), lambda_(lambda), seed_(seed), rate_("rate.p", arch.latent) {
    for (int i = 0; i < arch_.depth; ++i) {
      const int in = i == 0 ? arch_.in_ch : arch_.hidden;
      const int out = i == arch_.depth - 1 ? arch_.latent : arch_.hidden;
      enc_.emplace_back("enc" + std::to_string(i), in, out, 5, 2, 2);
    }
    for (int i = 0; i < arch_.depth; ++i) {
      const int in = i == 0 ? arch_.latent : arch_.hidden;
      const int out = i == arch_.depth - 1 ? arch_.in_ch : arch_.hidden;
      dec_.emplace_back("dec" + std::to_string(i), in, out, 5, 2, 2, 1);
    }
    init_params();
  }

  const ArchSpec& arch() const override { return arch_; }
  double lambda() const override { return lambda_; }
  uint64_t seed() const override { return seed_; }
  void set_lambda(double l) override { lambda_ = l; }
  void set_seed(uint64_t s) override { seed_ = s; }

  Tensor encode(const Tensor& x) const override {
    check_stride_compatible(*this, x);
    Tensor a = x;
    for (size_t i = 0; i < enc_.size(); ++i) {
      a = enc_[i].forward(a);
      if (i + 1 < enc_.size()) a = nn::silu(a);
    }
    return a;
  }

  Tensor decode(const Tensor& latent) const override {
    Tensor a = latent;
    for (size_t i = 0; i < dec_.size(); ++i) {
      a = dec_[i].forward(a);
      if (i + 1 < dec_.size()) a = nn::silu(a);
    }
    require(a.all_finite(), ErrorCode::kNumeric,
            "codec produced non-finite reconstruction");
    return a;
  }

  Tensor reconstruct(const Tensor& x, QuantizerMode mode,
                     uint64_t noise_seed) const override {
    Rng rng(noise_seed);
    return decode(apply_quantizer(encode(x), mode, &rng, nullptr));
  }

  Tensor reconstruct_vjp(const Tensor& x, QuantizerMode mode,
                         uint64_t noise_seed, const UpstreamFn& upstream,
                         Tensor* recon_out) const override {
    check_stride_compatible(*this, x);
    Rng rng(noise_seed);

    StackTrace enc_t, dec_t;
    Tensor a = x;
    for (size_t i = 0; i < enc_.size(); ++i) {
      enc_t.in.push_back(a);
      Tensor z = enc_[i].forward(a);
      enc_t.pre.push_back(z);
      a = i + 1 < enc_.size() ? nn::silu(z) : z;
    }
    Tensor qderiv;
    Tensor q = apply_quantizer(a, mode, &rng, &qderiv);
    a = q;
    for (size_t i = 0; i < dec_.size(); ++i) {
      dec_t.in.push_back(a);
      Tensor z = dec_[i].forward(a);
      dec_t.pre.push_back(z);
      a = i + 1 < dec_.size() ? nn::silu(z) : z;
    }
    if (recon_out) *recon_out = a;

    // dec_ and enc_ are conceptually const here (param_grads off);
    // backward() is non-const only because of the shared signature.
    auto* self = const_cast<FactorizedCodec*>(this);
    Tensor d = upstream(a);
    check_same_shape(d, a, "reconstruct_vjp upstream gradient");
    for (int i = static_cast<int>(dec_.size()) - 1; i >= 0; --i) {
      d = self->dec_[i].backward(dec_t.in[i], d, false);
      if (i > 0) d = nn::silu_backward(dec_t.pre[i - 1], d);
    }
    for (size_t i = 0; i < d.v.size(); ++i) d.v[i] *= qderiv.v[i];
    for (int i = static_cast<int>(enc_.size()) - 1; i >= 0; --i) {
      d = self->enc_[i].backward(enc_t.in[i], d, false);
      if (i > 0) d = nn::silu_backward(enc_t.pre[i - 1], d);
    }
    return d;
  }

  TrainStepResult train_forward_backward(const Tensor& x, Rng& rng) override {
    check_stride_compatible(*this, x);

    StackTrace enc_t, dec_t;
    Tensor a = x;
    for (size_t i = 0; i < enc_.size(); ++i) {
      enc_t.in.push_back(a);
      Tensor z = enc_[i].forward(a);
      enc_t.pre.push_back(z);
      a = i + 1 < enc_.size() ? nn::silu(z) : z;
    }
    Tensor y_noisy = a;
    for (double& v : y_noisy.v) v += rng.uniform(-0.5, 0.5);

    a = y_noisy;
    for (size_t i = 0; i < dec_.size(); ++i) {
      dec_t.in.push_back(a);
      Tensor z = dec_[i].forward(a);
      dec_t.pre.push_back(z);
      a = i + 1 < dec_.size() ? nn::silu(z) : z;
    }
    const Tensor& recon = a;

    const double n = static_cast<double>(x.size());
    const double pixels = static_cast<double>(x.h) * x.w;
    const double mse = frobenius_sq_diff(x, recon) / n;

    // d(lambda*255^2*mse)/d(recon)
    Tensor d = recon;
    const double mse_w = lambda_ * 255.0 * 255.0 * 2.0 / n;
    for (size_t i = 0; i < d.v.size(); ++i) d.v[i] = mse_w * (recon.v[i] - x.v[i]);

    for (int i = static_cast<int>(dec_.size()) - 1; i >= 0; --i) {
      d = dec_[i].backward(dec_t.in[i], d, true);
      if (i > 0) d = nn::silu_backward(dec_t.pre[i - 1], d);
    }

    const double bits = rate_.bits_backward(y_noisy, 1.0 / pixels, &d);

    for (int i = static_cast<int>(enc_.size()) - 1; i >= 0; --i) {
      d = enc_[i].backward(enc_t.in[i], d, true);
      if (i > 0) d = nn::silu_backward(enc_t.pre[i - 1], d);
    }

    TrainStepResult r;
    r.mse = mse;
    r.bpp = bits / pixels;
    r.loss = lambda_ * 255.0 * 255.0 * mse + r.bpp;
    return r;
  }

  std::vector<nn::Param*> params() override {
    std::vector<nn::Param*> out;
    for (auto& l : enc_) {
      out.push_back(&l.w);
      out.push_back(&l.b);
    }
    for (auto& l : dec_) {
      out.push_back(&l.w);
      out.push_back(&l.b);
    }
    out.push_back(&rate_.p);
    return out;
  }

 protected:
  void init_params() {
    Rng rng(seed_);
    for (size_t i = 0; i < enc_.size(); ++i) {
      const double fan_in = static_cast<double>(enc_[i].in_ch()) * 25.0;
      const double std = std::sqrt(2.0 / fan_in);
      for (double& v : enc_[i].w.value) v = std * rng.normal();
    }
    for (size_t i = 0; i < dec_.size(); ++i) {
      const double fan_in = static_cast<double>(dec_[i].in_ch()) * 25.0 / 4.0;
      const double std = std::sqrt(2.0 / fan_in);
      for (double& v : dec_[i].w.value) v = std * rng.normal();
    }
  }

  ArchSpec arch_;
  double lambda_;
  uint64_t seed_;
  std::vector<nn::Conv2d> enc_;
  std::vector<nn::ConvTranspose2d> dec_;
  RateProxy rate_;
};

// Factorized transform plus a hyper encoder/decoder pair that predicts
// per-element widths for the main latent's entropy proxy. The hyper path
// only participates in training; the reconstruction path is unchanged.
class HyperpriorCodec : public FactorizedCodec {
 public:
  HyperpriorCodec(const ArchSpec& arch, double lambda, uint64_t seed)
      : FactorizedCodec(arch, lambda, seed),
        ha0_("ha0", arch.latent, arch.hyper, 3, 1, 1),
        ha1_("ha1", arch.hyper, arch.hyper, 5, 2, 2),
        hs0_("hs0", arch.hyper, arch.hyper, 5, 2, 2, 1),
        hs1_("hs1", arch.hyper, arch.latent, 3, 1, 1),
        zrate_("zrate.p", arch.hyper) {
    Rng rng(seed ^ 0x68797065ull);  // independent stream for the hyper path
    auto init = [&](nn::Param& w, double fan_in) {
      const double std = std::sqrt(2.0 / fan_in);
      for (double& v : w.value) v = std * rng.normal();
    };
    init(ha0_.w, arch.latent * 9.0);
    init(ha1_.w, arch.hyper * 25.0);
    init(hs0_.w, arch.hyper * 25.0 / 4.0);
    init(hs1_.w, arch.hyper * 9.0);
    // Start width predictions near softplus(raw)=1.
    std::fill(hs1_.b.value.begin(), hs1_.b.value.end(), kUnitScaleRaw);
  }

  TrainStepResult train_forward_backward(const Tensor& x, Rng& rng) override {
    check_stride_compatible(*this, x);
    require((x.h / stride()) % 2 == 0 && (x.w / stride()) % 2 == 0,
            ErrorCode::kValidation,
            "hyperprior training needs latent dimensions divisible by 2");

    // Main analysis transform.
    StackTrace enc_t, dec_t;
    Tensor a = x;
    for (size_t i = 0; i < enc_.size(); ++i) {
      enc_t.in.push_back(a);
      Tensor z = enc_[i].forward(a);
      enc_t.pre.push_back(z);
      a = i + 1 < enc_.size() ? nn::silu(z) : z;
    }
    const Tensor y = a;

    // Hyper path: widths for y's conditional rate.
    const Tensor ha0_out = ha0_.forward(y);
    const Tensor ha0_act = nn::silu(ha0_out);
    const Tensor z = ha1_.forward(ha0_act);
    Tensor z_noisy = z;
    for (double& v : z_noisy.v) v += rng.uniform(-0.5, 0.5);
    const Tensor hs0_out = hs0_.forward(z_noisy);
    const Tensor hs0_act = nn::silu(hs0_out);
    const Tensor widths_raw = hs1_.forward(hs0_act);

    Tensor y_noisy = y;
    for (double& v : y_noisy.v) v += rng.uniform(-0.5, 0.5);

    a = y_noisy;
    for (size_t i = 0; i < dec_.size(); ++i) {
      dec_t.in.push_back(a);
      Tensor zz = dec_[i].forward(a);
      dec_t.pre.push_back(zz);
      a = i + 1 < dec_.size() ? nn::silu(zz) : zz;
    }
    const Tensor& recon = a;

    const double n = static_cast<double>(x.size());
    const double pixels = static_cast<double>(x.h) * x.w;
    const double mse = frobenius_sq_diff(x, recon) / n;
    const double up = 1.0 / pixels;

    // Conditional bits of y given predicted widths.
    Tensor dy(y.c, y.h, y.w);
    Tensor draw(y.c, y.h, y.w);
    double bits_y = 0.0;
    for (size_t i = 0; i < y_noisy.v.size(); ++i) {
      const double s = softplus(widths_raw.v[i]) + kScaleFloor;
      double dv = 0.0, ds = 0.0;
      bits_y += logistic_bits_elem(y_noisy.v[i], s, &dv, &ds);
      dy.v[i] = up * dv;
      draw.v[i] = up * ds * nn::sigmoid(widths_raw.v[i]);
    }

    // Decoder backward.
    Tensor d = recon;
    const double mse_w = lambda_ * 255.0 * 255.0 * 2.0 / n;
    for (size_t i = 0; i < d.v.size(); ++i) d.v[i] = mse_w * (recon.v[i] - x.v[i]);
    for (int i = static_cast<int>(dec_.size()) - 1; i >= 0; --i) {
      d = dec_[i].backward(dec_t.in[i], d, true);
      if (i > 0) d = nn::silu_backward(dec_t.pre[i - 1], d);
    }
    for (size_t i = 0; i < d.v.size(); ++i) d.v[i] += dy.v[i];

    // Width-prediction backward into the hyper synthesis chain.
    Tensor dh = hs1_.backward(hs0_act, draw, true);
    dh = nn::silu_backward(hs0_out, dh);
    Tensor dz = hs0_.backward(z_noisy, dh, true);

    const double bits_z = zrate_.bits_backward(z_noisy, up, &dz);

    Tensor dha = ha1_.backward(ha0_act, dz, true);
    dha = nn::silu_backward(ha0_out, dha);
    const Tensor dy_hyper = ha0_.backward(y, dha, true);
    for (size_t i = 0; i < d.v.size(); ++i) d.v[i] += dy_hyper.v[i];

    // Encoder backward with the combined latent gradient.
    for (int i = static_cast<int>(enc_.size()) - 1; i >= 0; --i) {
      d = enc_[i].backward(enc_t.in[i], d, true);
      if (i > 0) d = nn::silu_backward(enc_t.pre[i - 1], d);
    }

    TrainStepResult r;
    r.mse = mse;
    r.bpp = (bits_y + bits_z) / pixels;
    r.loss = lambda_ * 255.0 * 255.0 * mse + r.bpp;
    return r;
  }

  std::vector<nn::Param*> params() override {
    std::vector<nn::Param*> out = FactorizedCodec::params();
    out.push_back(&ha0_.w);
    out.push_back(&ha0_.b);
    out.push_back(&ha1_.w);
    out.push_back(&ha1_.b);
    out.push_back(&hs0_.w);
    out.push_back(&hs0_.b);
    out.push_back(&hs1_.w);
    out.push_back(&hs1_.b);
    out.push_back(&zrate_.p);
    return out;
  }

 private:
  nn::Conv2d ha0_, ha1_;
  nn::ConvTranspose2d hs0_;
  nn::Conv2d hs1_;
  RateProxy zrate_;
};

}  // namespace

std::unique_ptr<CodecModel> make_codec(const ArchSpec& arch, double lambda,
                                       uint64_t seed) {
  require(lambda > 0.0, ErrorCode::kValidation, "lambda must be positive");
  if (arch.family == "hyperprior")
    return std::make_unique<HyperpriorCodec>(arch, lambda, seed);
  return std::make_unique<FactorizedCodec>(arch, lambda, seed);
}

Tensor codec_forward(const CodecModel& model, const Tensor& x,
                     QuantizerMode mode, uint64_t noise_seed) {
  return model.reconstruct(x, mode, noise_seed);
}

namespace {

constexpr char kMagic[8] = {'L', 'I', 'C', 'C', 'K', 'P', 'T', '\n'};
constexpr uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T* v) {
  is.read(reinterpret_cast<char*>(v), sizeof(T));
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  uint32_t n = 0;
  read_pod(is, &n);
  require(n < (1u << 20), ErrorCode::kFormat, "checkpoint string too long");
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace

void save_checkpoint(CodecModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorCode::kIo, "cannot write checkpoint: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kFormatVersion);
  write_string(os, model.arch().id());
  write_pod(os, model.lambda());
  write_pod(os, model.seed());

  auto params = model.params();
  write_pod(os, static_cast<uint32_t>(params.size()));
  for (nn::Param* p : params) {
    write_string(os, p->name);
    write_pod(os, static_cast<uint64_t>(p->value.size()));
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  require(os.good(), ErrorCode::kIo, "checkpoint write failed: " + path);
}

std::unique_ptr<CodecModel> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), ErrorCode::kIo, "cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  require(is.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
          ErrorCode::kFormat, "not a codec checkpoint: " + path);
  uint32_t version = 0;
  read_pod(is, &version);
  require(version == kFormatVersion, ErrorCode::kFormat,
          "unsupported checkpoint version " + std::to_string(version));

  const std::string arch_id = read_string(is);
  double lambda = 0.0;
  uint64_t seed = 0;
  read_pod(is, &lambda);
  read_pod(is, &seed);

  auto model = make_codec(ArchSpec::parse(arch_id), lambda, seed);
  auto params = model->params();

  uint32_t count = 0;
  read_pod(is, &count);
  require(count == params.size(), ErrorCode::kFormat,
          "checkpoint parameter count mismatch in " + path);
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = read_string(is);
    uint64_t len = 0;
    read_pod(is, &len);
    nn::Param* target = nullptr;
    for (nn::Param* p : params)
      if (p->name == name) target = p;
    require(target != nullptr, ErrorCode::kFormat,
            "checkpoint has unknown parameter " + name);
    require(target->value.size() == len, ErrorCode::kFormat,
            "checkpoint size mismatch for parameter " + name);
    is.read(reinterpret_cast<char*>(target->value.data()),
            static_cast<std::streamsize>(len * sizeof(double)));
  }
  require(is.good(), ErrorCode::kFormat, "truncated checkpoint: " + path);
  return model;
}

}  // namespace licattack
