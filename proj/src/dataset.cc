#include "dataset.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "error.h"
#include "rng.h"

namespace fs = std::filesystem;

namespace licattack {

std::vector<DatasetEntry> load_dataset(const std::string& dir, bool skip_bad,
                                       std::vector<std::string>* skipped) {
  require(fs::is_directory(dir), ErrorCode::kIo,
          "dataset directory not found: " + dir);

  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });
  require(!paths.empty(), ErrorCode::kValidation,
          "no PNG files in dataset directory: " + dir);

  std::vector<DatasetEntry> out;
  for (const fs::path& p : paths) {
    try {
      DatasetEntry e;
      e.name = p.stem().string();
      e.path = p.string();
      e.image = load_png(p.string());
      out.push_back(std::move(e));
    } catch (const Error& err) {
      if (!skip_bad) throw;
      if (skipped)
        skipped->push_back(p.filename().string() + ": " + err.what());
    }
  }
  require(!out.empty(), ErrorCode::kValidation,
          "no loadable images in dataset directory: " + dir);
  return out;
}

Image synth_image(int h, int w, uint64_t seed) {
  require(h >= kMinImageDim && w >= kMinImageDim, ErrorCode::kValidation,
          "synthetic image too small");
  Rng rng(seed);
  Tensor px(3, h, w);

  // Bilinear gradient between four random corner colors.
  double corner[4][3];
  for (auto& c : corner)
    for (double& v : c) v = rng.uniform(0.15, 0.85);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y) {
      const double fy = static_cast<double>(y) / (h - 1);
      for (int x = 0; x < w; ++x) {
        const double fx = static_cast<double>(x) / (w - 1);
        px.at(c, y, x) = (1 - fy) * ((1 - fx) * corner[0][c] + fx * corner[1][c]) +
                         fy * ((1 - fx) * corner[2][c] + fx * corner[3][c]);
      }
    }

  // Soft-edged Gaussian blobs.
  const int blobs = 6 + static_cast<int>(rng.below(6));
  for (int b = 0; b < blobs; ++b) {
    const double cy = rng.uniform(0.0, h - 1.0), cx = rng.uniform(0.0, w - 1.0);
    const double sigma = rng.uniform(0.05, 0.22) * std::min(h, w);
    double amp[3];
    for (double& a : amp) a = rng.uniform(-0.35, 0.35);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        const double g = std::exp(-d2 * inv2s2);
        for (int c = 0; c < 3; ++c) px.at(c, y, x) += amp[c] * g;
      }
  }

  // A few soft step edges at random orientations: structure for SSIM.
  const int edges = 2 + static_cast<int>(rng.below(3));
  for (int e = 0; e < edges; ++e) {
    const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double nx = std::cos(theta), ny = std::sin(theta);
    const double off = rng.uniform(0.25, 0.75) * (nx * (w - 1) + ny * (h - 1));
    const double soft = rng.uniform(1.5, 6.0);
    double amp[3];
    for (double& a : amp) a = rng.uniform(-0.18, 0.18);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double s = std::tanh((nx * x + ny * y - off) / soft);
        for (int c = 0; c < 3; ++c) px.at(c, y, x) += amp[c] * s;
      }
  }

  // Mild oriented sinusoidal texture.
  const int waves = 2;
  for (int t = 0; t < waves; ++t) {
    const double theta = rng.uniform(0.0, 3.14159265358979323846);
    const double freq = rng.uniform(0.04, 0.25) * 2.0 * 3.14159265358979323846;
    const double phase = rng.uniform(0.0, 6.28);
    const double amp = rng.uniform(0.01, 0.035);
    const double kx = freq * std::cos(theta), ky = freq * std::sin(theta);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double s = amp * std::sin(kx * x + ky * y + phase);
        for (int c = 0; c < 3; ++c) px.at(c, y, x) += s;
      }
  }

  clamp_inplace(px, 0.0, 1.0);
  return quantize8(make_image(std::move(px)));
}

std::vector<std::string> write_synth_corpus(const std::string& dir, int count,
                                            int h, int w, uint64_t seed) {
  require(count >= 1, ErrorCode::kValidation, "corpus count must be >= 1");
  fs::create_directories(dir);
  std::vector<std::string> names;
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "synth%02d.png", i + 1);
    const Image img = synth_image(h, w, Rng::derive(seed, 1000 + i));
    save_png(img, (fs::path(dir) / name).string());
    names.push_back(name);
  }
  return names;
}

}  // namespace licattack
