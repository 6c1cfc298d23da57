#include "figures.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "error.h"

namespace fs = std::filesystem;

namespace licattack {

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used, MSB-left.
using Glyph = std::array<uint8_t, 7>;

const Glyph* glyph_for(char c) {
  static const Glyph digits[10] = {
      {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e},  // 0
      {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},  // 1
      {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f},  // 2
      {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},  // 3
      {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02},  // 4
      {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e},  // 5
      {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e},  // 6
      {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
      {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e},  // 8
      {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c},  // 9
  };
  static const Glyph letters[26] = {
      {0x00, 0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f},  // a
      {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1e},  // b
      {0x00, 0x00, 0x0e, 0x10, 0x10, 0x11, 0x0e},  // c
      {0x01, 0x01, 0x0d, 0x13, 0x11, 0x11, 0x0f},  // d
      {0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e},  // e
      {0x06, 0x09, 0x08, 0x1c, 0x08, 0x08, 0x08},  // f
      {0x00, 0x0f, 0x11, 0x11, 0x0f, 0x01, 0x0e},  // g
      {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11},  // h
      {0x04, 0x00, 0x0c, 0x04, 0x04, 0x04, 0x0e},  // i
      {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0c},  // j
      {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12},  // k
      {0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e},  // l
      {0x00, 0x00, 0x1a, 0x15, 0x15, 0x15, 0x15},  // m
      {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11},  // n
      {0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e},  // o
      {0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10},  // p
      {0x00, 0x00, 0x0d, 0x13, 0x0f, 0x01, 0x01},  // q
      {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10},  // r
      {0x00, 0x00, 0x0e, 0x10, 0x0e, 0x01, 0x1e},  // s
      {0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06},  // t
      {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0d},  // u
      {0x00, 0x00, 0x11, 0x11, 0x11, 0x0a, 0x04},  // v
      {0x00, 0x00, 0x11, 0x15, 0x15, 0x15, 0x0a},  // w
      {0x00, 0x00, 0x11, 0x0a, 0x04, 0x0a, 0x11},  // x
      {0x00, 0x00, 0x11, 0x11, 0x0f, 0x01, 0x0e},  // y
      {0x00, 0x00, 0x1f, 0x02, 0x04, 0x08, 0x1f},  // z
  };
  static const Glyph dot = {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c};
  static const Glyph dash = {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00};
  static const Glyph plus = {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00};
  static const Glyph colon = {0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00};
  static const Glyph slash = {0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10};
  static const Glyph equals = {0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00};
  static const Glyph under = {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f};
  static const Glyph comma = {0x00, 0x00, 0x00, 0x00, 0x0c, 0x04, 0x08};
  static const Glyph lbrack = {0x06, 0x04, 0x04, 0x04, 0x04, 0x04, 0x06};
  static const Glyph rbrack = {0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0c};

  if (c >= '0' && c <= '9') return &digits[c - '0'];
  const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower >= 'a' && lower <= 'z') return &letters[lower - 'a'];
  switch (c) {
    case '.': return &dot;
    case '-': return &dash;
    case '+': return &plus;
    case ':': return &colon;
    case '/': return &slash;
    case '=': return &equals;
    case '_': return &under;
    case ',': return &comma;
    case '[': return &lbrack;
    case ']': return &rbrack;
    default: return nullptr;  // unknown characters stay blank
  }
}

void blit(Tensor& canvas, const Tensor& img, int top, int left) {
  for (int c = 0; c < canvas.c; ++c) {
    const int sc = img.c == canvas.c ? c : 0;  // grayscale replicates
    for (int y = 0; y < img.h; ++y) {
      if (top + y >= canvas.h) break;
      for (int x = 0; x < img.w; ++x) {
        if (left + x >= canvas.w) break;
        canvas.at(c, top + y, left + x) = img.at(sc, y, x);
      }
    }
  }
}

}  // namespace

void draw_text(Tensor& canvas, int top, int left, const std::string& text,
               double shade) {
  int x = left;
  for (char ch : text) {
    if (const Glyph* g = glyph_for(ch)) {
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col) {
          if (!((*g)[row] & (0x10 >> col))) continue;
          const int yy = top + row, xx = x + col;
          if (yy < 0 || yy >= canvas.h || xx < 0 || xx >= canvas.w) continue;
          for (int c = 0; c < canvas.c; ++c) canvas.at(c, yy, xx) = shade;
        }
    }
    x += 6;
    if (x >= canvas.w) break;
  }
}

std::vector<std::string> emit_figures(const QualityReport& report,
                                      const std::string& report_dir,
                                      const std::string& out_dir) {
  fs::create_directories(out_dir);
  constexpr int kGutter = 4;
  constexpr int kStrip = 12;  // caption strip under each row
  constexpr const char* kColumns[5] = {"orig.png", "recon_orig.png", "ae.png",
                                       "recon_ae.png", "delta_vis.png"};

  std::vector<std::string> skipped;
  for (const AggregateRow& group : report.aggregates) {
    // Collect this group's rows and their artifacts.
    struct SheetRow {
      const CellResult* cell;
      std::array<Tensor, 5> imgs;
    };
    std::vector<SheetRow> sheet_rows;
    int cell_w = 0, cell_h = 0;
    for (const CellResult& c : report.rows) {
      if (c.key.codec_label != group.codec_label || c.key.eps != group.eps ||
          c.key.ic != group.ic || !c.ok)
        continue;
      const fs::path cdir = fs::path(report_dir) / "cells" / c.key.dir_name();
      SheetRow row;
      row.cell = &c;
      bool complete = true;
      for (int k = 0; k < 5 && complete; ++k) {
        const fs::path p = cdir / kColumns[k];
        if (!fs::exists(p)) {
          skipped.push_back(p.string());
          complete = false;
          break;
        }
        row.imgs[k] = load_png(p.string()).px;
      }
      if (!complete) continue;
      for (const Tensor& t : row.imgs) {
        cell_w = std::max(cell_w, t.w);
        cell_h = std::max(cell_h, t.h);
      }
      sheet_rows.push_back(std::move(row));
    }
    if (sheet_rows.empty()) continue;

    const int sheet_w = 2 * kGutter + 5 * cell_w + 4 * kGutter;
    const int row_h = cell_h + kStrip + kGutter;
    const int sheet_h = kGutter + static_cast<int>(sheet_rows.size()) * row_h;
    Tensor canvas(3, sheet_h, sheet_w, 1.0);

    char caption[256];
    for (size_t r = 0; r < sheet_rows.size(); ++r) {
      const int top = kGutter + static_cast<int>(r) * row_h;
      for (int k = 0; k < 5; ++k)
        blit(canvas, sheet_rows[r].imgs[k], top,
             kGutter + k * (cell_w + kGutter));
      const CellResult& c = *sheet_rows[r].cell;
      std::snprintf(caption, sizeof(caption),
                    "%s  orig/recon/ae/recon-ae/delta  delta scale %.4f..%.4f "
                    "-> 0..1",
                    c.key.image_name.c_str(), c.delta_min, c.delta_max);
      draw_text(canvas, top + cell_h + 3, kGutter, caption, 0.0);
    }

    std::string label = group.codec_label;
    for (char& ch : label)
      if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '-';
    char eps_s[32];
    if (group.eps == std::floor(group.eps))
      std::snprintf(eps_s, sizeof(eps_s), "%d", static_cast<int>(group.eps));
    else
      std::snprintf(eps_s, sizeof(eps_s), "%g", group.eps);
    const std::string name = "sheet-" + label + "-eps" + eps_s +
                             (group.ic ? "-ic-on.png" : "-ic-off.png");
    save_png(make_image(std::move(canvas)), (fs::path(out_dir) / name).string());
  }
  return skipped;
}

}  // namespace licattack
