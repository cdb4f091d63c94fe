#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "partmatch/feature_grid.h"
#include "partmatch/synthetic.h"

namespace partmatch {

struct CorpusImage {
  std::string id;
  FeatureGrid coarse;
  FeatureGrid fine;
  std::vector<PartAnnotation> annotations;
};

// Loads every image of a split listed in the manifest under corpus_dir.
std::vector<CorpusImage> load_split(const std::filesystem::path& corpus_dir,
                                    const CorpusManifest& manifest, const std::string& split);

}  // namespace partmatch
