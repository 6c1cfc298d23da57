#pragma once

#include <string>
#include <vector>

#include "experiment.h"

namespace licattack {

// Builds one contact sheet per (codec, eps, IC) group from the artifacts the
// report references: columns original / reconstructed original / adversarial
// example / reconstructed AE / normalized delta, one row per image, each row
// followed by a caption strip naming the image and the delta scale. Returns
// the list of rows skipped because an artifact was missing.
std::vector<std::string> emit_figures(const QualityReport& report,
                                      const std::string& report_dir,
                                      const std::string& out_dir);

// Minimal 5x7 bitmap text used in caption strips (ASCII subset; letters
// render case-insensitively, unknown characters as blanks).
void draw_text(Tensor& canvas, int top, int left, const std::string& text,
               double shade);

}  // namespace licattack
