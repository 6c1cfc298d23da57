#include "experiment.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "codec.h"
#include "error.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace licattack {

namespace {

constexpr int kReportSchemaVersion = 1;

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s)
    out += std::isalnum(static_cast<unsigned char>(c)) ? c : '-';
  return out;
}

std::string eps_tag(double eps) {
  char buf[32];
  if (eps == std::floor(eps) && std::abs(eps) < 1e6) {
    std::snprintf(buf, sizeof(buf), "%d", static_cast<int>(eps));
  } else {
    std::snprintf(buf, sizeof(buf), "%g", eps);
    for (char& c : buf)
      if (c == '.') c = 'p';
  }
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), ErrorCode::kIo, "cannot read file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorCode::kIo, "cannot write file: " + path);
  os << text;
  require(os.good(), ErrorCode::kIo, "write failed: " + path);
}

json attack_template_to_json(const AttackConfig& a) {
  return json{{"eta", a.eta},
              {"steps", a.steps},
              {"alpha", a.alpha},
              {"quantizer", quantizer_to_string(a.quantizer)},
              {"ic_band", band_to_string(a.ic_band)},
              {"ic_fraction", a.ic_fraction},
              {"init", init_to_string(a.init)},
              {"best_tracking", a.best_tracking}};
}

void attack_template_from_json(const json& j, AttackConfig* a) {
  require(j.is_object(), ErrorCode::kFormat, "attack config must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "eta") a->eta = v.get<double>();
    else if (k == "steps") a->steps = v.get<int>();
    else if (k == "alpha") a->alpha = v.get<double>();
    else if (k == "quantizer") a->quantizer = quantizer_from_string(v.get<std::string>());
    else if (k == "ic_band") a->ic_band = band_from_string(v.get<std::string>());
    else if (k == "ic_fraction") a->ic_fraction = v.get<double>();
    else if (k == "init") a->init = init_from_string(v.get<std::string>());
    else if (k == "best_tracking") a->best_tracking = v.get<bool>();
    else fail(ErrorCode::kFormat, "unknown attack config key: " + k);
  }
}

json score_to_json(const QualityScore& q) {
  return json{{"psnr", q.psnr}, {"ms_ssim", q.ms_ssim}};
}

QualityScore score_from_json(const json& j) {
  QualityScore q;
  q.psnr = j.at("psnr").get<double>();
  q.ms_ssim = j.at("ms_ssim").get<double>();
  return q;
}

Image center_crop(const Image& img, int ch, int cw) {
  const int y0 = (img.height() - ch) / 2;
  const int x0 = (img.width() - cw) / 2;
  Tensor out(img.channels(), ch, cw);
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < ch; ++y) {
      const double* src = img.px.plane(c) + static_cast<size_t>(y0 + y) * img.width() + x0;
      std::copy(src, src + cw, out.plane(c) + static_cast<size_t>(y) * cw);
    }
  return make_image(std::move(out));
}

int measure_max_abs_8bit(const std::string& a_png, const std::string& b_png) {
  const Image a = load_png(a_png), b = load_png(b_png);
  check_same_shape(a.px, b.px, "feasibility re-check");
  long best = 0;
  for (size_t i = 0; i < a.px.v.size(); ++i)
    best = std::max(best, std::lround(std::abs(a.px.v[i] - b.px.v[i]) * 255.0));
  return static_cast<int>(best);
}

json cell_to_json(const CellResult& cell, const AttackConfig& resolved,
                  const std::vector<TracePoint>& trace) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = "licattack-cell";
  j["image"] = cell.key.image_name;
  j["codec"] = cell.key.codec_label;
  j["eps"] = cell.key.eps;
  j["ic"] = cell.key.ic;
  j["ok"] = cell.ok;
  j["error"] = cell.error;
  j["crop"] = json{{"h", cell.crop_h}, {"w", cell.crop_w}};
  j["metrics"] = json{{"orig_recon", score_to_json(cell.orig_recon)},
                      {"ae_orig", score_to_json(cell.ae_orig)},
                      {"ae_recon", score_to_json(cell.ae_recon)},
                      {"drop", json{{"psnr", cell.drop.d_psnr},
                                    {"ms_ssim", cell.drop.d_ms_ssim}}}};
  json ac = attack_template_to_json(resolved);
  ac["eps"] = resolved.eps;
  ac["ic_enabled"] = resolved.ic_enabled;
  ac["seed"] = resolved.seed;
  j["attack"] = json{{"final_loss", cell.final_loss},
                     {"best_step", cell.best_step},
                     {"steps", cell.steps},
                     {"delta_min", cell.delta_min},
                     {"delta_max", cell.delta_max},
                     {"config", std::move(ac)}};
  j["feasibility"] = json{{"max_abs_delta_8bit", cell.max_abs_delta_8bit},
                          {"eps_8bit_limit", std::llround(cell.key.eps)}};
  j["artifacts"] = json{{"orig", "orig.png"},
                        {"ae", "ae.png"},
                        {"recon_orig", "recon_orig.png"},
                        {"recon_ae", "recon_ae.png"},
                        {"delta_vis", "delta_vis.png"}};
  json tr = json::array();
  for (const TracePoint& p : trace)
    tr.push_back(json::array({p.total, p.distortion, p.ic}));
  j["trace"] = std::move(tr);
  return j;
}

CellResult cell_from_json(const json& j, const CellKey& expect) {
  require(j.at("kind").get<std::string>() == "licattack-cell" &&
              j.at("schema_version").get<int>() == kReportSchemaVersion,
          ErrorCode::kFormat, "unrecognized cell sidecar");
  CellResult cell;
  cell.key.image_name = j.at("image").get<std::string>();
  cell.key.codec_label = j.at("codec").get<std::string>();
  cell.key.eps = j.at("eps").get<double>();
  cell.key.ic = j.at("ic").get<bool>();
  require(cell.key.image_name == expect.image_name &&
              cell.key.codec_label == expect.codec_label &&
              cell.key.eps == expect.eps && cell.key.ic == expect.ic,
          ErrorCode::kFormat, "cell sidecar does not match its grid cell");
  cell.ok = j.at("ok").get<bool>();
  cell.error = j.at("error").get<std::string>();
  cell.crop_h = j.at("crop").at("h").get<int>();
  cell.crop_w = j.at("crop").at("w").get<int>();
  const json& m = j.at("metrics");
  cell.orig_recon = score_from_json(m.at("orig_recon"));
  cell.ae_orig = score_from_json(m.at("ae_orig"));
  cell.ae_recon = score_from_json(m.at("ae_recon"));
  cell.drop.d_psnr = m.at("drop").at("psnr").get<double>();
  cell.drop.d_ms_ssim = m.at("drop").at("ms_ssim").get<double>();
  const json& a = j.at("attack");
  cell.final_loss = a.at("final_loss").get<double>();
  cell.best_step = a.at("best_step").get<int>();
  cell.steps = a.at("steps").get<int>();
  cell.delta_min = a.at("delta_min").get<double>();
  cell.delta_max = a.at("delta_max").get<double>();
  cell.max_abs_delta_8bit = j.at("feasibility").at("max_abs_delta_8bit").get<int>();
  return cell;
}

struct CellJob {
  CellKey key;
  size_t image_idx = 0;
  size_t codec_idx = 0;
  uint64_t attack_seed = 0;
};

CellResult compute_cell(const ExperimentConfig& cfg, const CodecModel& model,
                        const DatasetEntry& entry, const CellJob& job,
                        const fs::path& cdir) {
  CellResult cell;
  cell.key = job.key;
  std::vector<TracePoint> trace;
  AttackConfig resolved = cfg.attack;
  resolved.eps = job.key.eps;
  resolved.ic_enabled = job.key.ic;
  resolved.seed = job.attack_seed;

  try {
    const int s = model.stride();
    const int ch = entry.image.height() / s * s;
    const int cw = entry.image.width() / s * s;
    require(ch >= kMinImageDim && cw >= kMinImageDim, ErrorCode::kValidation,
            "image " + entry.name + " too small for codec stride " +
                std::to_string(s));
    Image orig = entry.image;
    if (ch != orig.height() || cw != orig.width())
      orig = center_crop(orig, ch, cw);
    orig = quantize8(clip01(orig));
    cell.crop_h = ch;
    cell.crop_w = cw;

    const Tensor recon0 = model.reconstruct(orig.px, QuantizerMode::kHard);
    const Image recon_orig = quantize8(make_image(clip01_tensor(recon0)));

    const AttackResult ar = pgd_attack(orig, model, resolved);
    trace = ar.trace;

    cell.orig_recon = quality(orig, recon_orig);
    cell.ae_orig = ar.ae_vs_original;
    cell.ae_recon = ar.ae_vs_reconstructed;
    cell.drop = degradation(cell.ae_orig, cell.ae_recon);
    cell.final_loss = ar.final_loss;
    cell.best_step = ar.best_step;
    cell.steps = ar.steps_executed;
    cell.delta_min = cell.delta_max = ar.delta.v.empty() ? 0.0 : ar.delta.v[0];
    for (double v : ar.delta.v) {
      cell.delta_min = std::min(cell.delta_min, v);
      cell.delta_max = std::max(cell.delta_max, v);
    }

    fs::create_directories(cdir);
    save_png(orig, (cdir / "orig.png").string());
    save_png(ar.x_adv_8bit, (cdir / "ae.png").string());
    save_png(recon_orig, (cdir / "recon_orig.png").string());
    save_png(ar.recon_adv, (cdir / "recon_ae.png").string());
    save_png(delta_visualization(ar.delta), (cdir / "delta_vis.png").string());

    cell.max_abs_delta_8bit = measure_max_abs_8bit(
        (cdir / "ae.png").string(), (cdir / "orig.png").string());
    cell.ok = cell.max_abs_delta_8bit <= std::llround(job.key.eps);
    if (!cell.ok)
      cell.error = "feasibility violation: |AE - original| reaches " +
                   std::to_string(cell.max_abs_delta_8bit) +
                   " grey levels, budget " + eps_tag(job.key.eps);
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }

  fs::create_directories(cdir);
  write_file((cdir / "cell.json").string(),
             cell_to_json(cell, resolved, trace).dump(2) + "\n");
  return cell;
}

CellResult run_or_resume_cell(const ExperimentConfig& cfg,
                              const CodecModel& model,
                              const DatasetEntry& entry, const CellJob& job) {
  const fs::path cdir = fs::path(cfg.out_dir) / "cells" / job.key.dir_name();
  const fs::path sidecar = cdir / "cell.json";

  if (fs::exists(sidecar)) {
    try {
      CellResult cell =
          cell_from_json(json::parse(read_file(sidecar.string())), job.key);
      if (cell.ok) {
        // Always-on feasibility audit straight from the saved PNGs.
        const int measured = measure_max_abs_8bit((cdir / "ae.png").string(),
                                                  (cdir / "orig.png").string());
        require(measured == cell.max_abs_delta_8bit &&
                    measured <= std::llround(job.key.eps),
                ErrorCode::kValidation,
                "saved artifacts violate the feasibility invariant in " +
                    cdir.string());
      }
      return cell;
    } catch (const std::exception&) {
      // Stale or damaged sidecar: recompute the cell from scratch.
    }
  }
  return compute_cell(cfg, model, entry, job, cdir);
}

json config_echo_json(const ExperimentConfig& cfg) {
  json codecs = json::array();
  for (const CodecRef& c : cfg.codecs)
    codecs.push_back(json{{"checkpoint", c.checkpoint}, {"label", c.label}});
  json ic = json::array();
  for (bool v : cfg.ic_variants) ic.push_back(v);
  json eps = json::array();
  for (double e : cfg.eps_values) eps.push_back(e);
  return json{{"dataset", cfg.dataset_dir},
              {"codecs", std::move(codecs)},
              {"eps", std::move(eps)},
              {"ic_variants", std::move(ic)},
              {"attack", attack_template_to_json(cfg.attack)},
              {"seed", cfg.seed},
              {"max_images", cfg.max_images},
              {"skip_bad_images", cfg.skip_bad_images}};
}

}  // namespace

std::string CellKey::dir_name() const {
  return sanitize(codec_label) + "-eps" + eps_tag(eps) +
         (ic ? "-ic-on" : "-ic-off") + "-" + sanitize(image_name);
}

void ExperimentConfig::validate() const {
  require(!dataset_dir.empty(), ErrorCode::kValidation,
          "config: dataset directory missing");
  require(fs::is_directory(dataset_dir), ErrorCode::kValidation,
          "config: dataset directory not found: " + dataset_dir);
  require(!codecs.empty(), ErrorCode::kValidation,
          "config: at least one codec required");
  for (const CodecRef& c : codecs) {
    require(!c.label.empty(), ErrorCode::kValidation,
            "config: empty codec label");
    require(fs::exists(c.checkpoint), ErrorCode::kValidation,
            "config: checkpoint not found: " + c.checkpoint);
  }
  for (size_t i = 0; i < codecs.size(); ++i)
    for (size_t j = i + 1; j < codecs.size(); ++j)
      require(codecs[i].label != codecs[j].label, ErrorCode::kValidation,
              "config: duplicate codec label " + codecs[i].label);
  require(!eps_values.empty(), ErrorCode::kValidation,
          "config: at least one eps value required");
  for (double e : eps_values)
    require(e >= 0.0, ErrorCode::kValidation, "config: eps must be >= 0");
  require(!ic_variants.empty(), ErrorCode::kValidation,
          "config: at least one IC variant required");
  require(ic_variants.size() <= 2, ErrorCode::kValidation,
          "config: duplicate IC variants");
  if (ic_variants.size() == 2)
    require(ic_variants[0] != ic_variants[1], ErrorCode::kValidation,
            "config: duplicate IC variants");
  require(max_images >= 0, ErrorCode::kValidation,
          "config: max_images must be >= 0");
  require(jobs >= 1, ErrorCode::kValidation, "config: jobs must be >= 1");
  attack.validate();
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::kFormat, "config must be a JSON object");

  ExperimentConfig cfg;
  for (const auto& [k, v] : j.items()) {
    if (k == "dataset") cfg.dataset_dir = v.get<std::string>();
    else if (k == "codecs") {
      for (const json& c : v)
        cfg.codecs.push_back(CodecRef{c.at("checkpoint").get<std::string>(),
                                      c.at("label").get<std::string>()});
    } else if (k == "eps") {
      cfg.eps_values.clear();
      for (const json& e : v) cfg.eps_values.push_back(e.get<double>());
    } else if (k == "ic_variants") {
      cfg.ic_variants.clear();
      for (const json& e : v) {
        if (e.is_boolean()) {
          cfg.ic_variants.push_back(e.get<bool>());
        } else {
          const std::string s = e.get<std::string>();
          if (s == "on" || s == "with") cfg.ic_variants.push_back(true);
          else if (s == "off" || s == "without") cfg.ic_variants.push_back(false);
          else fail(ErrorCode::kFormat, "config: bad IC variant: " + s);
        }
      }
    } else if (k == "attack") {
      attack_template_from_json(v, &cfg.attack);
    } else if (k == "seed") cfg.seed = v.get<uint64_t>();
    else if (k == "max_images") cfg.max_images = v.get<int>();
    else if (k == "jobs") cfg.jobs = v.get<int>();
    else if (k == "skip_bad_images") cfg.skip_bad_images = v.get<bool>();
    else if (k == "out_dir") cfg.out_dir = v.get<std::string>();
    else fail(ErrorCode::kFormat, "unknown config key: " + k);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  return from_json_text(read_file(path));
}

std::string ExperimentConfig::to_json_text() const {
  return config_echo_json(*this).dump(2) + "\n";
}

QualityReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  require(!cfg.out_dir.empty(), ErrorCode::kValidation,
          "experiment needs an output directory");
  fs::create_directories(fs::path(cfg.out_dir) / "cells");

  std::vector<std::string> skipped;
  std::vector<DatasetEntry> dataset =
      load_dataset(cfg.dataset_dir, cfg.skip_bad_images, &skipped);
  if (cfg.max_images > 0 &&
      dataset.size() > static_cast<size_t>(cfg.max_images))
    dataset.resize(static_cast<size_t>(cfg.max_images));

  std::vector<std::unique_ptr<CodecModel>> models;
  for (const CodecRef& ref : cfg.codecs)
    models.push_back(load_checkpoint(ref.checkpoint));

  std::vector<CellJob> cells;
  size_t cell_index = 0;
  for (size_t ci = 0; ci < cfg.codecs.size(); ++ci)
    for (double eps : cfg.eps_values)
      for (bool ic : cfg.ic_variants)
        for (size_t ii = 0; ii < dataset.size(); ++ii) {
          CellJob job;
          job.key = CellKey{dataset[ii].name, cfg.codecs[ci].label, eps, ic};
          job.image_idx = ii;
          job.codec_idx = ci;
          job.attack_seed =
              Rng::derive(Rng::derive(cfg.seed, cell_index), ii);
          cells.push_back(std::move(job));
          ++cell_index;
        }

  std::vector<CellResult> rows(cells.size());
  if (cfg.jobs <= 1) {
    for (size_t i = 0; i < cells.size(); ++i)
      rows[i] = run_or_resume_cell(cfg, *models[cells[i].codec_idx],
                                   dataset[cells[i].image_idx], cells[i]);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        rows[i] = run_or_resume_cell(cfg, *models[cells[i].codec_idx],
                                     dataset[cells[i].image_idx], cells[i]);
      }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(cfg.jobs, static_cast<int>(cells.size()));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  // Aggregate over successful cells, grouped in grid order.
  std::vector<AggregateRow> aggs;
  for (size_t ci = 0; ci < cfg.codecs.size(); ++ci)
    for (double eps : cfg.eps_values)
      for (bool ic : cfg.ic_variants) {
        AggregateRow agg;
        agg.codec_label = cfg.codecs[ci].label;
        agg.eps = eps;
        agg.ic = ic;
        for (size_t i = 0; i < cells.size(); ++i) {
          if (cells[i].codec_idx != ci || cells[i].key.eps != eps ||
              cells[i].key.ic != ic)
            continue;
          ++agg.n_total;
          if (!rows[i].ok) continue;
          ++agg.n_ok;
          agg.orig_recon.psnr += rows[i].orig_recon.psnr;
          agg.orig_recon.ms_ssim += rows[i].orig_recon.ms_ssim;
          agg.ae_orig.psnr += rows[i].ae_orig.psnr;
          agg.ae_orig.ms_ssim += rows[i].ae_orig.ms_ssim;
          agg.ae_recon.psnr += rows[i].ae_recon.psnr;
          agg.ae_recon.ms_ssim += rows[i].ae_recon.ms_ssim;
          agg.drop.d_psnr += rows[i].drop.d_psnr;
          agg.drop.d_ms_ssim += rows[i].drop.d_ms_ssim;
        }
        if (agg.n_ok > 0) {
          const double inv = 1.0 / agg.n_ok;
          agg.orig_recon.psnr *= inv;
          agg.orig_recon.ms_ssim *= inv;
          agg.ae_orig.psnr *= inv;
          agg.ae_orig.ms_ssim *= inv;
          agg.ae_recon.psnr *= inv;
          agg.ae_recon.ms_ssim *= inv;
          agg.drop.d_psnr *= inv;
          agg.drop.d_ms_ssim *= inv;
        }
        aggs.push_back(std::move(agg));
      }

  QualityReport rep;
  rep.schema_version = kReportSchemaVersion;
  rep.config_echo = cfg.to_json_text();
  rep.rows = std::move(rows);
  rep.aggregates = std::move(aggs);

  write_file((fs::path(cfg.out_dir) / "report.json").string(),
             report_to_json(rep));
  write_file((fs::path(cfg.out_dir) / "report.csv").string(),
             report_to_csv(rep));
  write_file((fs::path(cfg.out_dir) / "report.md").string(),
             report_to_markdown(rep));
  return rep;
}

IcComparison compare_ic(const QualityReport& report) {
  bool has_on = false, has_off = false;
  for (const AggregateRow& a : report.aggregates) {
    has_on |= a.ic;
    has_off |= !a.ic;
  }
  require(has_on && has_off, ErrorCode::kValidation,
          "IC comparison needs both the with-IC and without-IC variants");

  IcComparison cmp;
  std::vector<double> eps_values;
  for (const AggregateRow& a : report.aggregates) {
    if (std::find(cmp.codec_labels.begin(), cmp.codec_labels.end(),
                  a.codec_label) == cmp.codec_labels.end())
      cmp.codec_labels.push_back(a.codec_label);
    if (std::find(eps_values.begin(), eps_values.end(), a.eps) ==
        eps_values.end())
      eps_values.push_back(a.eps);
  }

  for (int variant = 0; variant < 2; ++variant) {
    const bool ic = variant == 0;
    for (double eps : eps_values) {
      IcComparison::Row row;
      row.ic = ic;
      row.eps = eps;
      for (const std::string& label : cmp.codec_labels) {
        const AggregateRow* found = nullptr;
        for (const AggregateRow& a : report.aggregates)
          if (a.codec_label == label && a.eps == eps && a.ic == ic) found = &a;
        require(found != nullptr, ErrorCode::kValidation,
                "IC comparison: missing grid cell for codec " + label);
        row.per_codec.push_back(found->ae_orig.ms_ssim);
      }
      row.average = 0.0;
      for (double v : row.per_codec) row.average += v;
      row.average /= static_cast<double>(row.per_codec.size());
      cmp.rows.push_back(std::move(row));
    }
  }
  return cmp;
}

std::string report_to_json(const QualityReport& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["kind"] = "licattack-quality-report";
  j["evaluation_path"] =
      "8-bit roundtripped images through the hard-quantizer codec";
  j["config"] = json::parse(r.config_echo);

  json rows = json::array();
  for (const CellResult& c : r.rows) {
    json cj;
    cj["image"] = c.key.image_name;
    cj["codec"] = c.key.codec_label;
    cj["eps"] = c.key.eps;
    cj["ic"] = c.key.ic;
    cj["ok"] = c.ok;
    if (!c.ok) cj["error"] = c.error;
    cj["crop"] = json{{"h", c.crop_h}, {"w", c.crop_w}};
    cj["orig_recon"] = score_to_json(c.orig_recon);
    cj["ae_orig"] = score_to_json(c.ae_orig);
    cj["ae_recon"] = score_to_json(c.ae_recon);
    cj["drop"] =
        json{{"psnr", c.drop.d_psnr}, {"ms_ssim", c.drop.d_ms_ssim}};
    cj["final_loss"] = c.final_loss;
    cj["best_step"] = c.best_step;
    cj["steps"] = c.steps;
    cj["max_abs_delta_8bit"] = c.max_abs_delta_8bit;
    cj["cell_dir"] = "cells/" + c.key.dir_name();
    rows.push_back(std::move(cj));
  }
  j["rows"] = std::move(rows);

  json aggs = json::array();
  for (const AggregateRow& a : r.aggregates) {
    json aj;
    aj["codec"] = a.codec_label;
    aj["eps"] = a.eps;
    aj["ic"] = a.ic;
    aj["n_ok"] = a.n_ok;
    aj["n_total"] = a.n_total;
    aj["orig_recon"] = score_to_json(a.orig_recon);
    aj["ae_orig"] = score_to_json(a.ae_orig);
    aj["ae_recon"] = score_to_json(a.ae_recon);
    aj["drop"] = json{{"psnr", a.drop.d_psnr}, {"ms_ssim", a.drop.d_ms_ssim}};
    aggs.push_back(std::move(aj));
  }
  j["aggregates"] = std::move(aggs);
  return j.dump(2) + "\n";
}

QualityReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("report is not valid JSON: ") + e.what());
  }
  require(j.value("kind", "") == "licattack-quality-report" &&
              j.value("schema_version", 0) == kReportSchemaVersion,
          ErrorCode::kFormat, "not a recognized quality report");

  QualityReport r;
  r.schema_version = kReportSchemaVersion;
  r.config_echo = j.at("config").dump(2) + "\n";
  for (const json& cj : j.at("rows")) {
    CellResult c;
    c.key.image_name = cj.at("image").get<std::string>();
    c.key.codec_label = cj.at("codec").get<std::string>();
    c.key.eps = cj.at("eps").get<double>();
    c.key.ic = cj.at("ic").get<bool>();
    c.ok = cj.at("ok").get<bool>();
    c.error = cj.value("error", "");
    c.crop_h = cj.at("crop").at("h").get<int>();
    c.crop_w = cj.at("crop").at("w").get<int>();
    c.orig_recon = score_from_json(cj.at("orig_recon"));
    c.ae_orig = score_from_json(cj.at("ae_orig"));
    c.ae_recon = score_from_json(cj.at("ae_recon"));
    c.drop.d_psnr = cj.at("drop").at("psnr").get<double>();
    c.drop.d_ms_ssim = cj.at("drop").at("ms_ssim").get<double>();
    c.final_loss = cj.at("final_loss").get<double>();
    c.best_step = cj.at("best_step").get<int>();
    c.steps = cj.at("steps").get<int>();
    c.max_abs_delta_8bit = cj.at("max_abs_delta_8bit").get<int>();
    r.rows.push_back(std::move(c));
  }
  for (const json& aj : j.at("aggregates")) {
    AggregateRow a;
    a.codec_label = aj.at("codec").get<std::string>();
    a.eps = aj.at("eps").get<double>();
    a.ic = aj.at("ic").get<bool>();
    a.n_ok = aj.at("n_ok").get<int>();
    a.n_total = aj.at("n_total").get<int>();
    a.orig_recon = score_from_json(aj.at("orig_recon"));
    a.ae_orig = score_from_json(aj.at("ae_orig"));
    a.ae_recon = score_from_json(aj.at("ae_recon"));
    a.drop.d_psnr = aj.at("drop").at("psnr").get<double>();
    a.drop.d_ms_ssim = aj.at("drop").at("ms_ssim").get<double>();
    r.aggregates.push_back(std::move(a));
  }
  return r;
}

std::string report_to_csv(const QualityReport& r) {
  std::string out =
      "image,codec,eps,ic,ok,psnr_orig_recon,msssim_orig_recon,"
      "psnr_ae_orig,msssim_ae_orig,psnr_ae_recon,msssim_ae_recon,"
      "dpsnr,dmsssim,final_loss,best_step,steps,max_abs_delta_8bit,error\n";
  char buf[512];
  for (const CellResult& c : r.rows) {
    std::string err = c.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    std::snprintf(buf, sizeof(buf),
                  "%s,%s,%s,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,"
                  "%.6g,%d,%d,%d,%s\n",
                  c.key.image_name.c_str(), c.key.codec_label.c_str(),
                  eps_tag(c.key.eps).c_str(), c.key.ic ? 1 : 0, c.ok ? 1 : 0,
                  c.orig_recon.psnr, c.orig_recon.ms_ssim, c.ae_orig.psnr,
                  c.ae_orig.ms_ssim, c.ae_recon.psnr, c.ae_recon.ms_ssim,
                  c.drop.d_psnr, c.drop.d_ms_ssim, c.final_loss, c.best_step,
                  c.steps, c.max_abs_delta_8bit, err.c_str());
    out += buf;
  }
  return out;
}

std::string report_to_markdown(const QualityReport& r) {
  std::string out;
  out += "# Reconstruction-distortion attack report\n\n";
  out +=
      "Mean quality per grid cell. Columns follow the original/AE/"
      "reconstructed-AE pairing; deltas are AE minus reconstructed AE.\n\n";
  out +=
      "| Codec | eps | IC | Recon. orig PSNR | Recon. orig MS-SSIM | AE PSNR "
      "| AE MS-SSIM | Recon. AE PSNR | Recon. AE MS-SSIM | dPSNR | dMS-SSIM "
      "| n |\n";
  out +=
      "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  char buf[512];
  for (const AggregateRow& a : r.aggregates) {
    std::snprintf(buf, sizeof(buf),
                  "| %s | %s | %s | %.2f | %.4f | %.2f | %.4f | %.2f | %.4f "
                  "| %.2f | %.4f | %d/%d |\n",
                  a.codec_label.c_str(), eps_tag(a.eps).c_str(),
                  a.ic ? "on" : "off", a.orig_recon.psnr,
                  a.orig_recon.ms_ssim, a.ae_orig.psnr, a.ae_orig.ms_ssim,
                  a.ae_recon.psnr, a.ae_recon.ms_ssim, a.drop.d_psnr,
                  a.drop.d_ms_ssim, a.n_ok, a.n_total);
    out += buf;
  }

  std::vector<const CellResult*> failures;
  for (const CellResult& c : r.rows)
    if (!c.ok) failures.push_back(&c);
  if (!failures.empty()) {
    out += "\n## Failures\n\n";
    for (const CellResult* c : failures)
      out += "- " + c->key.dir_name() + ": " + c->error + "\n";
  }
  return out;
}

std::string ic_comparison_to_json(const IcComparison& c) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = "licattack-ic-comparison";
  j["metric"] = "ms_ssim(adversarial example, original)";
  json labels = json::array();
  for (const std::string& l : c.codec_labels) labels.push_back(l);
  j["codecs"] = std::move(labels);
  json rows = json::array();
  for (const IcComparison::Row& row : c.rows) {
    json rj;
    rj["ic"] = row.ic;
    rj["eps"] = row.eps;
    json vals = json::array();
    for (double v : row.per_codec) vals.push_back(v);
    rj["per_codec"] = std::move(vals);
    rj["average"] = row.average;
    rows.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string ic_comparison_to_markdown(const IcComparison& c) {
  std::string out = "# Imperceptibility of adversarial examples\n\n";
  out += "MS-SSIM between adversarial examples and originals (higher = less "
         "visible perturbation).\n\n";
  out += "| Variant | eps |";
  for (const std::string& l : c.codec_labels) out += " " + l + " |";
  out += " Average |\n|---|---|";
  for (size_t i = 0; i < c.codec_labels.size(); ++i) out += "---|";
  out += "---|\n";
  char buf[64];
  for (const IcComparison::Row& row : c.rows) {
    out += std::string("| ") + (row.ic ? "w/ IC" : "w/o IC") + " | " +
           eps_tag(row.eps) + " |";
    for (double v : row.per_codec) {
      std::snprintf(buf, sizeof(buf), " %.4f |", v);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), " %.4f |\n", row.average);
    out += buf;
  }
  return out;
}

}  // namespace licattack
