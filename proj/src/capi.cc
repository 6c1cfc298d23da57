#include "licattack.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <new>
#include <string>

#include "json.hpp"

#include "attack.h"
#include "codec.h"
#include "dataset.h"
#include "error.h"
#include "experiment.h"
#include "figures.h"
#include "image.h"
#include "metrics.h"
#include "train.h"

using licattack::Error;
using licattack::ErrorCode;
using json = nlohmann::ordered_json;

struct licattack_image {
  licattack::Image img;
};

struct licattack_model {
  std::unique_ptr<licattack::CodecModel> model;
};

struct licattack_attack_result {
  licattack::AttackResult res;
};

namespace {

thread_local std::string g_last_error;

int code_of(ErrorCode c) { return static_cast<int>(c); }

template <typename F>
int guarded(F&& fn) {
  try {
    fn();
    return LICATTACK_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return code_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LICATTACK_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LICATTACK_ERR_INTERNAL;
  }
}

int require_arg(bool ok, const char* msg) {
  if (ok) return LICATTACK_OK;
  g_last_error = msg;
  return LICATTACK_ERR_VALIDATION;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* licattack_version(void) { return "0.1.0"; }

const char* licattack_status_name(int status) {
  switch (status) {
    case LICATTACK_OK: return "ok";
    case LICATTACK_ERR_IO: return "io";
    case LICATTACK_ERR_FORMAT: return "format";
    case LICATTACK_ERR_VALIDATION: return "validation";
    case LICATTACK_ERR_NUMERIC: return "numeric";
    case LICATTACK_ERR_TRAINING: return "training";
    case LICATTACK_ERR_INTERNAL: return "internal";
    default: return "unknown";
  }
}

const char* licattack_last_error(void) { return g_last_error.c_str(); }

void licattack_free_string(char* s) { delete[] s; }

/* ---------------- images ---------------- */

int licattack_image_load_png(const char* path, licattack_image** out) {
  if (int rc = require_arg(path && out, "null argument")) return rc;
  return guarded([&] {
    auto* h = new licattack_image{licattack::load_png(path)};
    *out = h;
  });
}

int licattack_image_save_png(const licattack_image* img, const char* path) {
  if (int rc = require_arg(img && path, "null argument")) return rc;
  return guarded([&] { licattack::save_png(img->img, path); });
}

int licattack_image_create(const double* data, int channels, int height,
                           int width, licattack_image** out) {
  if (int rc = require_arg(data && out, "null argument")) return rc;
  return guarded([&] {
    licattack::Tensor t(channels, height, width);
    std::memcpy(t.v.data(), data, t.v.size() * sizeof(double));
    auto* h = new licattack_image{licattack::make_image(std::move(t))};
    *out = h;
  });
}

int licattack_image_shape(const licattack_image* img, int* channels,
                          int* height, int* width) {
  if (int rc = require_arg(img != nullptr, "null image")) return rc;
  if (channels) *channels = img->img.channels();
  if (height) *height = img->img.height();
  if (width) *width = img->img.width();
  return LICATTACK_OK;
}

int licattack_image_read(const licattack_image* img, double* out,
                         size_t capacity) {
  if (int rc = require_arg(img && out, "null argument")) return rc;
  if (int rc = require_arg(capacity >= img->img.px.v.size(),
                           "buffer too small for image"))
    return rc;
  std::memcpy(out, img->img.px.v.data(),
              img->img.px.v.size() * sizeof(double));
  return LICATTACK_OK;
}

void licattack_image_free(licattack_image* img) { delete img; }

int licattack_write_synth_corpus(const char* dir, int count, int height,
                                 int width, uint64_t seed) {
  if (int rc = require_arg(dir != nullptr, "null directory")) return rc;
  return guarded(
      [&] { licattack::write_synth_corpus(dir, count, height, width, seed); });
}

/* ---------------- metrics ---------------- */

int licattack_psnr(const licattack_image* a, const licattack_image* b,
                   double* out) {
  if (int rc = require_arg(a && b && out, "null argument")) return rc;
  return guarded([&] { *out = licattack::psnr(a->img.px, b->img.px); });
}

int licattack_ms_ssim(const licattack_image* a, const licattack_image* b,
                      double* out) {
  if (int rc = require_arg(a && b && out, "null argument")) return rc;
  return guarded([&] { *out = licattack::ms_ssim(a->img.px, b->img.px); });
}

/* ---------------- codec ---------------- */

int licattack_model_create(const char* arch_id, double lambda, uint64_t seed,
                           licattack_model** out) {
  if (int rc = require_arg(arch_id && out, "null argument")) return rc;
  return guarded([&] {
    auto* h = new licattack_model{
        licattack::make_codec(licattack::ArchSpec::parse(arch_id), lambda, seed)};
    *out = h;
  });
}

int licattack_model_load(const char* path, licattack_model** out) {
  if (int rc = require_arg(path && out, "null argument")) return rc;
  return guarded([&] {
    auto* h = new licattack_model{licattack::load_checkpoint(path)};
    *out = h;
  });
}

int licattack_model_save(licattack_model* model, const char* path) {
  if (int rc = require_arg(model && path, "null argument")) return rc;
  return guarded([&] { licattack::save_checkpoint(*model->model, path); });
}

int licattack_model_arch(const licattack_model* model, char* buf,
                         size_t buflen) {
  if (int rc = require_arg(model && buf, "null argument")) return rc;
  const std::string id = model->model->arch().id();
  if (int rc = require_arg(buflen > id.size(), "buffer too small")) return rc;
  std::memcpy(buf, id.c_str(), id.size() + 1);
  return LICATTACK_OK;
}

int licattack_model_lambda(const licattack_model* model, double* out) {
  if (int rc = require_arg(model && out, "null argument")) return rc;
  *out = model->model->lambda();
  return LICATTACK_OK;
}

int licattack_model_stride(const licattack_model* model, int* out) {
  if (int rc = require_arg(model && out, "null argument")) return rc;
  *out = model->model->stride();
  return LICATTACK_OK;
}

void licattack_model_free(licattack_model* model) { delete model; }

void licattack_train_config_default(licattack_train_config* cfg) {
  if (!cfg) return;
  licattack::TrainOptions d;
  cfg->steps = d.steps;
  cfg->seed = d.seed;
  cfg->crop = d.crop;
  cfg->batch = d.batch;
  cfg->lr = d.lr;
  cfg->clip_norm = d.clip_norm;
  cfg->log_every = d.log_every;
}

int licattack_model_train(licattack_model* model, const char* data_dir,
                          const licattack_train_config* cfg,
                          double* initial_mse, double* final_mse) {
  if (int rc = require_arg(model && data_dir && cfg, "null argument"))
    return rc;
  return guarded([&] {
    licattack::TrainOptions opt;
    opt.steps = cfg->steps;
    opt.seed = cfg->seed;
    opt.crop = cfg->crop;
    opt.batch = cfg->batch;
    opt.lr = cfg->lr;
    opt.clip_norm = cfg->clip_norm;
    opt.log_every = cfg->log_every;

    std::vector<licattack::Image> corpus;
    for (auto& entry : licattack::load_dataset(data_dir))
      corpus.push_back(std::move(entry.image));
    const licattack::TrainStats stats =
        licattack::train_codec(*model->model, corpus, opt);
    if (initial_mse) *initial_mse = stats.initial_mse;
    if (final_mse) *final_mse = stats.final_mse;
  });
}

int licattack_model_reconstruct(const licattack_model* model,
                                const licattack_image* img,
                                const char* quantizer, uint64_t noise_seed,
                                licattack_image** out) {
  if (int rc = require_arg(model && img && quantizer && out, "null argument"))
    return rc;
  return guarded([&] {
    const licattack::QuantizerMode mode =
        licattack::quantizer_from_string(quantizer);
    licattack::Tensor recon =
        licattack::codec_forward(*model->model, img->img.px, mode, noise_seed);
    auto* h = new licattack_image{
        licattack::make_image(licattack::clip01_tensor(recon))};
    *out = h;
  });
}

/* ---------------- attack ---------------- */

void licattack_attack_config_default(licattack_attack_config* cfg) {
  if (!cfg) return;
  licattack::AttackConfig d;
  cfg->eps = d.eps;
  cfg->eta = d.eta;
  cfg->steps = d.steps;
  cfg->alpha = d.alpha;
  cfg->ic_enabled = d.ic_enabled ? 1 : 0;
  cfg->ic_band = "low";
  cfg->ic_fraction = d.ic_fraction;
  cfg->quantizer = "cubic";
  cfg->init = "zero";
  cfg->seed = d.seed;
  cfg->best_tracking = d.best_tracking ? 1 : 0;
}

int licattack_attack_run(const licattack_model* model,
                         const licattack_image* img,
                         const licattack_attack_config* cfg,
                         licattack_attack_result** out) {
  if (int rc = require_arg(model && img && cfg && out, "null argument"))
    return rc;
  return guarded([&] {
    licattack::AttackConfig ac;
    ac.eps = cfg->eps;
    ac.eta = cfg->eta;
    ac.steps = cfg->steps;
    ac.alpha = cfg->alpha;
    ac.ic_enabled = cfg->ic_enabled != 0;
    ac.ic_band = licattack::band_from_string(cfg->ic_band ? cfg->ic_band : "low");
    ac.ic_fraction = cfg->ic_fraction;
    ac.quantizer =
        licattack::quantizer_from_string(cfg->quantizer ? cfg->quantizer : "cubic");
    ac.init = licattack::init_from_string(cfg->init ? cfg->init : "zero");
    ac.seed = cfg->seed;
    ac.best_tracking = cfg->best_tracking != 0;

    auto* h = new licattack_attack_result{
        licattack::pgd_attack(img->img, *model->model, ac)};
    *out = h;
  });
}

int licattack_attack_result_image(const licattack_attack_result* res,
                                  const char* which, licattack_image** out) {
  if (int rc = require_arg(res && which && out, "null argument")) return rc;
  return guarded([&] {
    const std::string w = which;
    licattack::Image img;
    if (w == "ae") img = res->res.x_adv;
    else if (w == "ae_8bit") img = res->res.x_adv_8bit;
    else if (w == "recon_ae") img = res->res.recon_adv;
    else if (w == "delta_vis")
      img = licattack::delta_visualization(res->res.delta);
    else
      licattack::fail(ErrorCode::kValidation,
                      "unknown attack-result image: " + w);
    *out = new licattack_image{std::move(img)};
  });
}

int licattack_attack_result_trace_len(const licattack_attack_result* res,
                                      int* out) {
  if (int rc = require_arg(res && out, "null argument")) return rc;
  *out = static_cast<int>(res->res.trace.size());
  return LICATTACK_OK;
}

int licattack_attack_result_trace(const licattack_attack_result* res,
                                  double* total, double* distortion,
                                  double* ic, int capacity) {
  if (int rc = require_arg(res != nullptr, "null result")) return rc;
  if (int rc = require_arg(
          capacity >= static_cast<int>(res->res.trace.size()),
          "trace buffer too small"))
    return rc;
  for (size_t i = 0; i < res->res.trace.size(); ++i) {
    if (total) total[i] = res->res.trace[i].total;
    if (distortion) distortion[i] = res->res.trace[i].distortion;
    if (ic) ic[i] = res->res.trace[i].ic;
  }
  return LICATTACK_OK;
}

int licattack_attack_result_summary_json(const licattack_attack_result* res,
                                         char** out_json) {
  if (int rc = require_arg(res && out_json, "null argument")) return rc;
  return guarded([&] {
    const licattack::AttackResult& r = res->res;
    double dmin = r.delta.v.empty() ? 0.0 : r.delta.v[0], dmax = dmin;
    for (double v : r.delta.v) {
      dmin = std::min(dmin, v);
      dmax = std::max(dmax, v);
    }
    json j;
    j["schema_version"] = 1;
    j["kind"] = "licattack-attack-summary";
    j["steps_executed"] = r.steps_executed;
    j["final_loss"] = r.final_loss;
    j["best_step"] = r.best_step;
    j["delta_min"] = dmin;
    j["delta_max"] = dmax;
    j["ae_vs_original"] = json{{"psnr", r.ae_vs_original.psnr},
                               {"ms_ssim", r.ae_vs_original.ms_ssim}};
    j["ae_vs_reconstructed"] =
        json{{"psnr", r.ae_vs_reconstructed.psnr},
             {"ms_ssim", r.ae_vs_reconstructed.ms_ssim}};
    json tr = json::array();
    for (const licattack::TracePoint& p : r.trace)
      tr.push_back(json::array({p.total, p.distortion, p.ic}));
    j["trace"] = std::move(tr);
    *out_json = dup_string(j.dump(2) + "\n");
  });
}

void licattack_attack_result_free(licattack_attack_result* res) { delete res; }

/* ---------------- experiments ---------------- */

int licattack_experiment_run(const char* config_json, const char* out_dir,
                             char** report_json) {
  if (int rc = require_arg(config_json && out_dir, "null argument")) return rc;
  return guarded([&] {
    licattack::ExperimentConfig cfg =
        licattack::ExperimentConfig::from_json_text(config_json);
    cfg.out_dir = out_dir;
    const licattack::QualityReport rep = licattack::run_experiment(cfg);
    if (report_json) *report_json = dup_string(licattack::report_to_json(rep));
  });
}

int licattack_compare_ic(const char* report_json, char** table_json,
                         char** table_markdown) {
  if (int rc = require_arg(report_json != nullptr, "null report")) return rc;
  return guarded([&] {
    const licattack::QualityReport rep =
        licattack::report_from_json(report_json);
    const licattack::IcComparison cmp = licattack::compare_ic(rep);
    if (table_json)
      *table_json = dup_string(licattack::ic_comparison_to_json(cmp));
    if (table_markdown)
      *table_markdown = dup_string(licattack::ic_comparison_to_markdown(cmp));
  });
}

int licattack_emit_figures(const char* report_dir, const char* out_dir,
                           char** skipped_json) {
  if (int rc = require_arg(report_dir && out_dir, "null argument")) return rc;
  return guarded([&] {
    const std::string report_path = std::string(report_dir) + "/report.json";
    std::ifstream is(report_path, std::ios::binary);
    licattack::require(is.good(), ErrorCode::kIo,
                       "cannot read report: " + report_path);
    std::string text((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    const licattack::QualityReport rep = licattack::report_from_json(text);
    const std::vector<std::string> skipped =
        licattack::emit_figures(rep, report_dir, out_dir);
    if (skipped_json) {
      json arr = json::array();
      for (const std::string& s : skipped) arr.push_back(s);
      *skipped_json = dup_string(arr.dump(2) + "\n");
    }
  });
}

}  // extern "C"
