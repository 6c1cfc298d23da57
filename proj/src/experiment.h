#pragma once

#include <string>
#include <vector>

#include "attack.h"
#include "dataset.h"

namespace licattack {

struct CodecRef {
  std::string checkpoint;
  std::string label;
};

// The full experimental grid: images x codecs x eps values x IC variants.
// `attack` is a template; eps, ic_enabled, and the seed are filled per cell.
struct ExperimentConfig {
  std::string dataset_dir;
  std::vector<CodecRef> codecs;
  std::vector<double> eps_values;
  std::vector<bool> ic_variants{true};
  AttackConfig attack;
  uint64_t seed = 1;
  int max_images = 0;  // 0 = use every image in the dataset
  int jobs = 1;
  bool skip_bad_images = false;
  std::string out_dir;  // never echoed into reports

  void validate() const;
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);
  // Canonical config echo used inside reports; excludes out_dir and jobs so
  // the same experiment produces the same bytes wherever it runs.
  std::string to_json_text() const;
};

struct CellKey {
  std::string image_name;
  std::string codec_label;
  double eps = 0.0;
  bool ic = true;
  std::string dir_name() const;
};

struct CellResult {
  CellKey key;
  bool ok = false;
  std::string error;
  QualityScore orig_recon;  // original vs reconstructed original
  QualityScore ae_orig;     // original vs adversarial example
  QualityScore ae_recon;    // adversarial example vs its reconstruction
  Degradation drop;         // ae_orig minus ae_recon, the Table-1 deltas
  double final_loss = 0.0;
  int best_step = 0;
  int steps = 0;
  double delta_min = 0.0, delta_max = 0.0;
  int max_abs_delta_8bit = 0;  // re-measured from the saved PNGs
  int crop_h = 0, crop_w = 0;  // size actually attacked (stride-compatible)
};

struct AggregateRow {
  std::string codec_label;
  double eps = 0.0;
  bool ic = true;
  int n_ok = 0, n_total = 0;
  QualityScore orig_recon, ae_orig, ae_recon;  // arithmetic means over n_ok
  Degradation drop;
};

struct QualityReport {
  int schema_version = 1;
  std::string config_echo;  // canonical config JSON
  std::vector<CellResult> rows;
  std::vector<AggregateRow> aggregates;
};

// Runs (or resumes, via per-cell JSON sidecars under out_dir/cells) the whole
// grid, writes per-cell artifacts and report.{json,csv,md} into out_dir, and
// returns the assembled report. Cell failures land in rows[i].error and are
// excluded from aggregates.
QualityReport run_experiment(const ExperimentConfig& config);

// MS-SSIM(AE, original) with vs. without IC, per codec and eps.
struct IcComparison {
  std::vector<std::string> codec_labels;
  struct Row {
    bool ic = true;
    double eps = 0.0;
    std::vector<double> per_codec;  // mean MS-SSIM(AE, original)
    double average = 0.0;
  };
  std::vector<Row> rows;
};

// Requires the report to contain both IC variants.
IcComparison compare_ic(const QualityReport& report);

std::string report_to_json(const QualityReport& r);
std::string report_to_csv(const QualityReport& r);
std::string report_to_markdown(const QualityReport& r);
std::string ic_comparison_to_json(const IcComparison& c);
std::string ic_comparison_to_markdown(const IcComparison& c);

// Parses a report.json written by run_experiment (used by the figures step).
QualityReport report_from_json(const std::string& text);

}  // namespace licattack
