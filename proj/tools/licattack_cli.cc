// Command-line front end. Everything goes through the public C API so this
// file doubles as a usage example for liblicattack.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "licattack.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void die(int rc, const std::string& context) {
  std::fprintf(stderr, "error (%s): %s\n", licattack_status_name(rc),
               licattack_last_error());
  if (!context.empty()) std::fprintf(stderr, "while: %s\n", context.c_str());
  std::exit(rc);
}

void check(int rc, const std::string& context) {
  if (rc != LICATTACK_OK) die(rc, context);
}

std::string default_out(const std::string& flag, const std::string& leaf) {
  if (!flag.empty()) return flag;
  const char* root = std::getenv("LICATTACK_OUT_ROOT");
  if (root && *root) return std::string(root) + "/" + leaf;
  std::fprintf(stderr,
               "error: no --out given and LICATTACK_OUT_ROOT is not set\n");
  std::exit(LICATTACK_ERR_VALIDATION);
}

std::string read_file_or_die(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is.good()) {
    std::fprintf(stderr, "error: cannot read %s\n", path.c_str());
    std::exit(LICATTACK_ERR_IO);
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file_or_die(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os.good()) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    std::exit(LICATTACK_ERR_IO);
  }
  os << text;
}

struct ScopedString {
  char* s = nullptr;
  ~ScopedString() { licattack_free_string(s); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"White-box reconstruction-distortion attacks on learned image "
               "compression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(licattack_version()));

  // ---- synth ----
  auto* synth = app.add_subcommand(
      "synth", "Write a deterministic procedural PNG corpus");
  std::string synth_out;
  int synth_count = 8, synth_h = 192, synth_w = 256;
  uint64_t synth_seed = 7;
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--count", synth_count, "Number of images");
  synth->add_option("--height", synth_h, "Image height");
  synth->add_option("--width", synth_w, "Image width");
  synth->add_option("--seed", synth_seed, "Generator seed");

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train a desk-scale codec");
  std::string train_arch = "factorized-d4n24m32c3", train_data, train_ckpt;
  double train_lambda = 0.0130;
  licattack_train_config tc;
  licattack_train_config_default(&tc);
  uint64_t train_seed = 1;
  int train_steps = tc.steps, train_crop = tc.crop, train_batch = tc.batch;
  int train_log = 100;
  double train_lr = tc.lr, train_clip = tc.clip_norm;
  train->add_option("--arch", train_arch, "Architecture id");
  train->add_option("--lambda", train_lambda, "Quality level (e.g. 0.0130)");
  train->add_option("--steps", train_steps, "Optimizer steps");
  train->add_option("--seed", train_seed, "Init + data-order seed");
  train->add_option("--data", train_data, "Directory of training PNGs")
      ->required();
  train->add_option("--out", train_ckpt, "Checkpoint path to write");
  train->add_option("--crop", train_crop, "Training patch edge");
  train->add_option("--batch", train_batch, "Patches per step");
  train->add_option("--lr", train_lr, "Adam learning rate");
  train->add_option("--clip", train_clip, "Gradient-norm clip (<=0 off)");
  train->add_option("--log-every", train_log, "Progress print interval");

  // ---- attack ----
  auto* attack = app.add_subcommand(
      "attack", "Craft an adversarial example for one image");
  std::string atk_ckpt, atk_image, atk_out;
  licattack_attack_config ac;
  licattack_attack_config_default(&ac);
  double atk_eps = ac.eps, atk_eta = ac.eta, atk_alpha = ac.alpha;
  double atk_fraction = ac.ic_fraction;
  int atk_steps = ac.steps;
  uint64_t atk_seed = ac.seed;
  bool atk_ic = true, atk_best = true;
  std::string atk_band = "low", atk_quant = "cubic", atk_init = "zero";
  attack->add_option("--ckpt", atk_ckpt, "Codec checkpoint")->required();
  attack->add_option("--image", atk_image, "Input PNG")->required();
  attack->add_option("--eps", atk_eps, "L-inf budget, 0-255 scale");
  attack->add_option("--eta", atk_eta, "IC weight");
  attack->add_option("--steps", atk_steps, "PGD steps");
  attack->add_option("--alpha", atk_alpha, "Step size (normalized; <=0 auto)");
  attack->add_flag("--ic,!--no-ic", atk_ic, "Toggle the IC term");
  attack->add_option("--ic-band", atk_band, "Protected band: low or high");
  attack->add_option("--ic-fraction", atk_fraction, "Band size in (0,1]");
  attack->add_option("--quantizer", atk_quant, "cubic, ste or noise");
  attack->add_option("--init", atk_init, "zero or random");
  attack->add_option("--seed", atk_seed, "Attack seed");
  attack->add_flag("--best,!--no-best", atk_best, "Return best-loss iterate");
  attack->add_option("--out", atk_out, "Output directory");

  // ---- evaluate ----
  auto* evaluate = app.add_subcommand(
      "evaluate", "Run the full experiment grid from a config file");
  std::string eval_config, eval_out;
  evaluate->add_option("--config", eval_config, "Experiment config JSON")
      ->required();
  evaluate->add_option("--out", eval_out, "Output directory");

  // ---- compare-ic ----
  auto* cmpic = app.add_subcommand(
      "compare-ic", "Run the grid and tabulate AE imperceptibility with "
                    "and without IC");
  std::string cmp_config, cmp_out;
  cmpic->add_option("--config", cmp_config, "Experiment config JSON "
                                            "(must list both IC variants)")
      ->required();
  cmpic->add_option("--out", cmp_out, "Output directory");

  // ---- figures ----
  auto* figures = app.add_subcommand(
      "figures", "Contact sheets from a finished experiment directory");
  std::string fig_report, fig_out;
  figures->add_option("--report", fig_report, "Experiment output directory")
      ->required();
  figures->add_option("--out", fig_out, "Directory for the sheets");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    const std::string out = default_out(synth_out, "corpus");
    check(licattack_write_synth_corpus(out.c_str(), synth_count, synth_h,
                                       synth_w, synth_seed),
          "writing synthetic corpus");
    std::printf("wrote %d images to %s\n", synth_count, out.c_str());
    return 0;
  }

  if (train->parsed()) {
    const std::string out = default_out(train_ckpt, "model.ckpt");
    licattack_model* model = nullptr;
    check(licattack_model_create(train_arch.c_str(), train_lambda, train_seed,
                                 &model),
          "creating model");
    tc.steps = train_steps;
    tc.seed = train_seed;
    tc.crop = train_crop;
    tc.batch = train_batch;
    tc.lr = train_lr;
    tc.clip_norm = train_clip;
    tc.log_every = train_log;
    double mse0 = 0.0, mse1 = 0.0;
    check(licattack_model_train(model, train_data.c_str(), &tc, &mse0, &mse1),
          "training");
    fs::create_directories(fs::path(out).parent_path().empty()
                               ? "."
                               : fs::path(out).parent_path().string());
    check(licattack_model_save(model, out.c_str()), "saving checkpoint");
    licattack_model_free(model);
    std::printf("eval mse %.6f -> %.6f; checkpoint %s\n", mse0, mse1,
                out.c_str());
    return 0;
  }

  if (attack->parsed()) {
    const std::string out = default_out(atk_out, "attack");
    fs::create_directories(out);
    licattack_model* model = nullptr;
    licattack_image* img = nullptr;
    check(licattack_model_load(atk_ckpt.c_str(), &model), "loading checkpoint");
    check(licattack_image_load_png(atk_image.c_str(), &img), "loading image");

    ac.eps = atk_eps;
    ac.eta = atk_eta;
    ac.steps = atk_steps;
    ac.alpha = atk_alpha;
    ac.ic_enabled = atk_ic ? 1 : 0;
    ac.ic_band = atk_band.c_str();
    ac.ic_fraction = atk_fraction;
    ac.quantizer = atk_quant.c_str();
    ac.init = atk_init.c_str();
    ac.seed = atk_seed;
    ac.best_tracking = atk_best ? 1 : 0;

    licattack_attack_result* res = nullptr;
    check(licattack_attack_run(model, img, &ac, &res), "running attack");

    const char* outputs[][2] = {{"ae_8bit", "ae.png"},
                                {"recon_ae", "recon_ae.png"},
                                {"delta_vis", "delta_vis.png"}};
    for (const auto& o : outputs) {
      licattack_image* view = nullptr;
      check(licattack_attack_result_image(res, o[0], &view), o[0]);
      check(licattack_image_save_png(view, (out + "/" + o[1]).c_str()), o[1]);
      licattack_image_free(view);
    }
    ScopedString summary;
    check(licattack_attack_result_summary_json(res, &summary.s),
          "summarizing attack");
    write_file_or_die(out + "/attack.json", summary.s);

    json j = json::parse(std::string(summary.s));
    std::printf(
        "attack done: final loss %.4f, AE vs recon-AE psnr %.2f dB, "
        "ms-ssim %.4f; artifacts in %s\n",
        j["final_loss"].get<double>(),
        j["ae_vs_reconstructed"]["psnr"].get<double>(),
        j["ae_vs_reconstructed"]["ms_ssim"].get<double>(), out.c_str());
    licattack_attack_result_free(res);
    licattack_image_free(img);
    licattack_model_free(model);
    return 0;
  }

  if (evaluate->parsed() || cmpic->parsed()) {
    const bool with_tables = cmpic->parsed();
    const std::string cfg_path = with_tables ? cmp_config : eval_config;
    const std::string out = default_out(with_tables ? cmp_out : eval_out,
                                        with_tables ? "compare-ic" : "evaluate");
    const std::string cfg_text = read_file_or_die(cfg_path);

    ScopedString report;
    check(licattack_experiment_run(cfg_text.c_str(), out.c_str(), &report.s),
          "running experiment");
    std::printf("report written to %s/report.{json,csv,md}\n", out.c_str());

    if (with_tables) {
      ScopedString table_json, table_md;
      check(licattack_compare_ic(report.s, &table_json.s, &table_md.s),
            "comparing IC variants");
      write_file_or_die(out + "/compare_ic.json", table_json.s);
      write_file_or_die(out + "/compare_ic.md", table_md.s);
      std::printf("%s", table_md.s);
    }
    return 0;
  }

  if (figures->parsed()) {
    const std::string out = default_out(fig_out, "figures");
    ScopedString skipped;
    check(licattack_emit_figures(fig_report.c_str(), out.c_str(), &skipped.s),
          "emitting figures");
    const json arr = json::parse(std::string(skipped.s));
    if (!arr.empty()) {
      std::fprintf(stderr, "skipped %zu missing artifacts\n",
                   static_cast<size_t>(arr.size()));
      for (const auto& a : arr)
        std::fprintf(stderr, "  %s\n", a.get<std::string>().c_str());
    }
    std::printf("contact sheets written to %s\n", out.c_str());
    return 0;
  }

  return 0;
}
