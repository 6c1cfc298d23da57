#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "licattack.h"

#include "test_util.h"

using json = nlohmann::ordered_json;
using licattack::testing::TempDir;

namespace {

// RAII wrappers so a failing CHECK cannot leak handles.
struct ImagePtr {
  licattack_image* p = nullptr;
  ~ImagePtr() { licattack_image_free(p); }
};
struct ModelPtr {
  licattack_model* p = nullptr;
  ~ModelPtr() { licattack_model_free(p); }
};
struct ResultPtr {
  licattack_attack_result* p = nullptr;
  ~ResultPtr() { licattack_attack_result_free(p); }
};
struct StringPtr {
  char* p = nullptr;
  ~StringPtr() { licattack_free_string(p); }
};

std::vector<double> flat(int c, int h, int w, double v) {
  return std::vector<double>(static_cast<size_t>(c) * h * w, v);
}

std::vector<double> read_all(const licattack_image* img) {
  int c = 0, h = 0, w = 0;
  REQUIRE(licattack_image_shape(img, &c, &h, &w) == LICATTACK_OK);
  std::vector<double> out(static_cast<size_t>(c) * h * w);
  REQUIRE(licattack_image_read(img, out.data(), out.size()) == LICATTACK_OK);
  return out;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(licattack_version()) > 0);
  CHECK(std::string(licattack_status_name(LICATTACK_OK)) == "ok");
  CHECK(std::string(licattack_status_name(LICATTACK_ERR_IO)) == "io");
  CHECK(std::string(licattack_status_name(LICATTACK_ERR_FORMAT)) == "format");
  CHECK(std::string(licattack_status_name(LICATTACK_ERR_VALIDATION)) ==
        "validation");
  CHECK(std::string(licattack_status_name(LICATTACK_ERR_NUMERIC)) == "numeric");
  CHECK(std::string(licattack_status_name(LICATTACK_ERR_TRAINING)) ==
        "training");
  CHECK(std::string(licattack_status_name(LICATTACK_ERR_INTERNAL)) ==
        "internal");
  CHECK(std::string(licattack_status_name(42)) == "unknown");
}

TEST_CASE("null arguments are rejected up front") {
  CHECK(licattack_image_load_png(nullptr, nullptr) ==
        LICATTACK_ERR_VALIDATION);
  CHECK(std::string(licattack_last_error()).find("null") != std::string::npos);
  CHECK(licattack_image_save_png(nullptr, "x.png") ==
        LICATTACK_ERR_VALIDATION);
  CHECK(licattack_psnr(nullptr, nullptr, nullptr) == LICATTACK_ERR_VALIDATION);
  CHECK(licattack_model_create(nullptr, 0.1, 1, nullptr) ==
        LICATTACK_ERR_VALIDATION);
  CHECK(licattack_attack_run(nullptr, nullptr, nullptr, nullptr) ==
        LICATTACK_ERR_VALIDATION);
  CHECK(licattack_experiment_run(nullptr, nullptr, nullptr) ==
        LICATTACK_ERR_VALIDATION);
  licattack_image_free(nullptr);  // free of null is a no-op, not a crash
  licattack_model_free(nullptr);
  licattack_attack_result_free(nullptr);
  licattack_free_string(nullptr);
}

TEST_CASE("image create/read/save/load round-trips") {
  TempDir tmp;
  std::vector<double> data = flat(3, 32, 32, 0.25);
  data[5] = 0.75;

  ImagePtr img;
  REQUIRE(licattack_image_create(data.data(), 3, 32, 32, &img.p) ==
          LICATTACK_OK);
  int c = 0, h = 0, w = 0;
  CHECK(licattack_image_shape(img.p, &c, &h, &w) == LICATTACK_OK);
  CHECK(c == 3);
  CHECK(h == 32);
  CHECK(w == 32);
  CHECK(read_all(img.p) == data);

  std::vector<double> small(10);
  CHECK(licattack_image_read(img.p, small.data(), small.size()) ==
        LICATTACK_ERR_VALIDATION);

  const std::string path = tmp.file("roundtrip.png");
  REQUIRE(licattack_image_save_png(img.p, path.c_str()) == LICATTACK_OK);
  ImagePtr back;
  REQUIRE(licattack_image_load_png(path.c_str(), &back.p) == LICATTACK_OK);
  const std::vector<double> got = read_all(back.p);
  for (size_t i = 0; i < data.size(); ++i)  // 8-bit quantization on save
    CHECK(std::abs(got[i] - data[i]) <= 0.5 / 255.0 + 1e-12);

  // Bad construction surfaces as a validation error with a message.
  ImagePtr bad;
  CHECK(licattack_image_create(data.data(), 3, 8, 8, &bad.p) ==
        LICATTACK_ERR_VALIDATION);
  CHECK(std::strlen(licattack_last_error()) > 0);
  CHECK(licattack_image_create(data.data(), 2, 32, 32, &bad.p) ==
        LICATTACK_ERR_VALIDATION);

  CHECK(licattack_image_load_png(tmp.file("missing.png").c_str(), &bad.p) ==
        LICATTACK_ERR_IO);
  std::ofstream(tmp.file("junk.png")) << "these are not PNG bytes";
  CHECK(licattack_image_load_png(tmp.file("junk.png").c_str(), &bad.p) ==
        LICATTACK_ERR_FORMAT);
}

TEST_CASE("metrics match their closed forms") {
  const std::vector<double> a = flat(1, 32, 32, 0.5);
  std::vector<double> b = a;
  for (double& v : b) v += 16.0 / 255.0;

  ImagePtr ia, ib;
  REQUIRE(licattack_image_create(a.data(), 1, 32, 32, &ia.p) == LICATTACK_OK);
  REQUIRE(licattack_image_create(b.data(), 1, 32, 32, &ib.p) == LICATTACK_OK);

  double v = 0.0;
  CHECK(licattack_psnr(ia.p, ia.p, &v) == LICATTACK_OK);
  CHECK(v == 100.0);
  CHECK(licattack_psnr(ia.p, ib.p, &v) == LICATTACK_OK);
  CHECK(v == doctest::Approx(20.0 * std::log10(255.0 / 16.0)).epsilon(1e-9));

  CHECK(licattack_ms_ssim(ia.p, ia.p, &v) == LICATTACK_OK);
  CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

  ImagePtr wrong;
  const std::vector<double> rgb = flat(3, 32, 32, 0.5);
  REQUIRE(licattack_image_create(rgb.data(), 3, 32, 32, &wrong.p) ==
          LICATTACK_OK);
  CHECK(licattack_psnr(ia.p, wrong.p, &v) != LICATTACK_OK);  // shape mismatch
}

TEST_CASE("model lifecycle: create, train, save, load, reconstruct") {
  TempDir tmp;
  const std::string data_dir = tmp.file("corpus");
  REQUIRE(licattack_write_synth_corpus(data_dir.c_str(), 2, 48, 48, 31) ==
          LICATTACK_OK);

  ModelPtr model;
  REQUIRE(licattack_model_create("factorized-d2n6m8c3", 0.0483, 4, &model.p) ==
          LICATTACK_OK);
  char arch[64];
  REQUIRE(licattack_model_arch(model.p, arch, sizeof(arch)) == LICATTACK_OK);
  CHECK(std::string(arch) == "factorized-d2n6m8c3");
  char tiny[4];
  CHECK(licattack_model_arch(model.p, tiny, sizeof(tiny)) ==
        LICATTACK_ERR_VALIDATION);
  double lambda = 0.0;
  CHECK(licattack_model_lambda(model.p, &lambda) == LICATTACK_OK);
  CHECK(lambda == 0.0483);
  int stride = 0;
  CHECK(licattack_model_stride(model.p, &stride) == LICATTACK_OK);
  CHECK(stride == 4);

  licattack_train_config tc;
  licattack_train_config_default(&tc);
  CHECK(tc.steps > 0);
  CHECK(tc.lr > 0.0);
  tc.steps = 40;
  tc.crop = 32;
  tc.batch = 1;
  tc.lr = 2e-3;
  double mse0 = 0.0, mse1 = 0.0;
  REQUIRE(licattack_model_train(model.p, data_dir.c_str(), &tc, &mse0,
                                &mse1) == LICATTACK_OK);
  CHECK(mse1 < mse0);

  CHECK(licattack_model_create("bogus-d2n6m8c3", 0.1, 1, &model.p) ==
        LICATTACK_ERR_FORMAT);

  const std::string ckpt = tmp.file("m.ckpt");
  REQUIRE(licattack_model_save(model.p, ckpt.c_str()) == LICATTACK_OK);
  ModelPtr loaded;
  REQUIRE(licattack_model_load(ckpt.c_str(), &loaded.p) == LICATTACK_OK);
  REQUIRE(licattack_model_arch(loaded.p, arch, sizeof(arch)) == LICATTACK_OK);
  CHECK(std::string(arch) == "factorized-d2n6m8c3");
  CHECK(licattack_model_lambda(loaded.p, &lambda) == LICATTACK_OK);
  CHECK(lambda == 0.0483);

  ModelPtr none;
  CHECK(licattack_model_load(tmp.file("nope.ckpt").c_str(), &none.p) ==
        LICATTACK_ERR_IO);
  std::ofstream(tmp.file("junk.ckpt")) << "junk";
  CHECK(licattack_model_load(tmp.file("junk.ckpt").c_str(), &none.p) ==
        LICATTACK_ERR_FORMAT);

  // Reconstructions from the original and reloaded models agree exactly.
  ImagePtr src;
  {
    const std::string png = data_dir + "/synth01.png";
    REQUIRE(licattack_image_load_png(png.c_str(), &src.p) == LICATTACK_OK);
  }
  ImagePtr r1, r2;
  REQUIRE(licattack_model_reconstruct(model.p, src.p, "hard", 0, &r1.p) ==
          LICATTACK_OK);
  REQUIRE(licattack_model_reconstruct(loaded.p, src.p, "hard", 0, &r2.p) ==
          LICATTACK_OK);
  CHECK(read_all(r1.p) == read_all(r2.p));
  for (double v : read_all(r1.p)) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  ImagePtr r3;
  CHECK(licattack_model_reconstruct(model.p, src.p, "fuzzy", 0, &r3.p) ==
        LICATTACK_ERR_VALIDATION);
}

TEST_CASE("attack produces images, trace and summary through the C API") {
  TempDir tmp;
  const std::string data_dir = tmp.file("corpus");
  REQUIRE(licattack_write_synth_corpus(data_dir.c_str(), 1, 32, 32, 77) ==
          LICATTACK_OK);
  ImagePtr img;
  REQUIRE(licattack_image_load_png((data_dir + "/synth01.png").c_str(),
                                   &img.p) == LICATTACK_OK);
  ModelPtr model;
  REQUIRE(licattack_model_create("factorized-d2n6m8c3", 0.0483, 4, &model.p) ==
          LICATTACK_OK);

  licattack_attack_config ac;
  licattack_attack_config_default(&ac);
  CHECK(ac.eps == 32.0);
  CHECK(ac.ic_enabled != 0);
  CHECK(std::string(ac.ic_band) == "low");
  ac.eps = 8.0;
  ac.steps = 5;
  ac.init = "random";
  ac.seed = 2;

  ResultPtr res;
  REQUIRE(licattack_attack_run(model.p, img.p, &ac, &res.p) == LICATTACK_OK);

  int len = 0;
  REQUIRE(licattack_attack_result_trace_len(res.p, &len) == LICATTACK_OK);
  CHECK(len == 6);
  std::vector<double> total(len), dist(len), ic(len);
  REQUIRE(licattack_attack_result_trace(res.p, total.data(), dist.data(),
                                        ic.data(), len) == LICATTACK_OK);
  for (int i = 0; i < len; ++i)
    CHECK(total[i] ==
          doctest::Approx(-dist[i] + ac.eta * ic[i]).epsilon(1e-12));
  CHECK(licattack_attack_result_trace(res.p, total.data(), nullptr, nullptr,
                                      2) == LICATTACK_ERR_VALIDATION);

  for (const char* which : {"ae", "ae_8bit", "recon_ae", "delta_vis"}) {
    CAPTURE(which);
    ImagePtr out;
    REQUIRE(licattack_attack_result_image(res.p, which, &out.p) ==
            LICATTACK_OK);
    int c = 0, h = 0, w = 0;
    CHECK(licattack_image_shape(out.p, &c, &h, &w) == LICATTACK_OK);
    CHECK(c == 3);
    CHECK(h == 32);
    CHECK(w == 32);
  }
  ImagePtr nope;
  CHECK(licattack_attack_result_image(res.p, "orig", &nope.p) ==
        LICATTACK_ERR_VALIDATION);

  // The 8-bit pair stays inside the level budget.
  ImagePtr ae8;
  REQUIRE(licattack_attack_result_image(res.p, "ae_8bit", &ae8.p) ==
          LICATTACK_OK);
  const std::vector<double> orig = read_all(img.p);
  const std::vector<double> adv = read_all(ae8.p);
  long worst = 0;
  for (size_t i = 0; i < orig.size(); ++i)
    worst = std::max(worst, std::labs(std::lround(orig[i] * 255.0) -
                                      std::lround(adv[i] * 255.0)));
  CHECK(worst <= 8);

  StringPtr summary;
  REQUIRE(licattack_attack_result_summary_json(res.p, &summary.p) ==
          LICATTACK_OK);
  const json j = json::parse(summary.p);
  CHECK(j.at("kind") == "licattack-attack-summary");
  CHECK(j.at("steps_executed") == 5);
  CHECK(j.at("trace").size() == 6);
  CHECK(j.at("ae_vs_original").at("ms_ssim").get<double>() <= 1.0);

  // Invalid config surfaces through the status code.
  licattack_attack_config bad = ac;
  bad.eps = -4.0;
  ResultPtr r2;
  CHECK(licattack_attack_run(model.p, img.p, &bad, &r2.p) ==
        LICATTACK_ERR_VALIDATION);
}

TEST_CASE("experiment, IC comparison and figures through the C API") {
  TempDir tmp;
  const std::string data_dir = tmp.file("corpus");
  REQUIRE(licattack_write_synth_corpus(data_dir.c_str(), 1, 48, 48, 99) ==
          LICATTACK_OK);

  ModelPtr model;
  REQUIRE(licattack_model_create("factorized-d2n6m8c3", 0.0483, 4, &model.p) ==
          LICATTACK_OK);
  const std::string ckpt = tmp.file("toy.ckpt");
  REQUIRE(licattack_model_save(model.p, ckpt.c_str()) == LICATTACK_OK);

  const json cfg = {
      {"dataset", data_dir},
      {"codecs", json::array({{{"checkpoint", ckpt}, {"label", "toy"}}})},
      {"eps", {4.0}},
      {"ic_variants", {true, false}},
      {"attack", {{"steps", 3}, {"eta", 10.0}}},
      {"seed", 5},
  };
  const std::string out_dir = tmp.file("out");

  StringPtr report;
  REQUIRE(licattack_experiment_run(cfg.dump().c_str(), out_dir.c_str(),
                                   &report.p) == LICATTACK_OK);
  const json rep = json::parse(report.p);
  CHECK(rep.at("kind") == "licattack-quality-report");
  REQUIRE(rep.at("rows").size() == 2);  // 1 image x 1 eps x 2 IC variants
  for (const json& row : rep.at("rows")) CHECK(row.at("ok").get<bool>());

  StringPtr table, table_md;
  REQUIRE(licattack_compare_ic(report.p, &table.p, &table_md.p) ==
          LICATTACK_OK);
  const json tbl = json::parse(table.p);
  CHECK(tbl.at("kind") == "licattack-ic-comparison");
  CHECK(tbl.at("rows").size() == 2);
  CHECK(std::string(table_md.p).find("w/o IC") != std::string::npos);

  StringPtr skipped;
  REQUIRE(licattack_emit_figures(out_dir.c_str(), tmp.file("figs").c_str(),
                                 &skipped.p) == LICATTACK_OK);
  CHECK(json::parse(skipped.p).empty());
  CHECK(std::ifstream(tmp.file("figs") + "/sheet-toy-eps4-ic-on.png").good());
  CHECK(std::ifstream(tmp.file("figs") + "/sheet-toy-eps4-ic-off.png").good());

  CHECK(licattack_emit_figures(tmp.file("void").c_str(),
                               tmp.file("figs2").c_str(),
                               nullptr) == LICATTACK_ERR_IO);
  CHECK(licattack_experiment_run("{\"bad\":", out_dir.c_str(), nullptr) ==
        LICATTACK_ERR_FORMAT);
  CHECK(licattack_compare_ic("{}", nullptr, nullptr) == LICATTACK_ERR_FORMAT);
}
