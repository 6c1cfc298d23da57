#pragma once

#include <string>
#include <vector>

#include "image.h"

namespace licattack {

struct DatasetEntry {
  std::string name;  // file stem, e.g. "kodim01"
  std::string path;
  Image image;
};

// Loads every *.png in `dir`, sorted by filename for determinism. With
// skip_bad set, unreadable files are collected into `skipped` (when given)
// instead of aborting the whole load.
std::vector<DatasetEntry> load_dataset(const std::string& dir,
                                       bool skip_bad = false,
                                       std::vector<std::string>* skipped = nullptr);

// Procedural stand-in corpus: smooth gradients, blobs, soft edges and mild
// texture, fully determined by the seed. Lets every experiment run
// self-contained when no photographic dataset is on disk.
Image synth_image(int h, int w, uint64_t seed);
std::vector<std::string> write_synth_corpus(const std::string& dir, int count,
                                            int h, int w, uint64_t seed);

}  // namespace licattack
