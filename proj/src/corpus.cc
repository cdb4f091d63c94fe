#include "partmatch/corpus.h"

#include "partmatch/error.h"

namespace partmatch {

std::vector<CorpusImage> load_split(const std::filesystem::path& corpus_dir,
                                    const CorpusManifest& manifest, const std::string& split) {
  const auto it = manifest.splits.find(split);
  if (it == manifest.splits.end()) {
    throw Error(ErrorCode::kSchema, "manifest has no split '" + split + "'");
  }
  std::vector<CorpusImage> out;
  for (const CorpusEntry& e : it->second) {
    FeatureGrid coarse = read_grid(corpus_dir / e.grid);
    FeatureGrid fine = read_grid(corpus_dir / e.fine);
    if (coarse.meta().image_id != e.id) {
      throw Error(ErrorCode::kSchema, (corpus_dir / e.grid).string() + ": image_id '" +
                                          coarse.meta().image_id + "' does not match manifest id '" +
                                          e.id + "'");
    }
    out.push_back({e.id, std::move(coarse), std::move(fine), read_annotations(corpus_dir / e.annotations)});
  }
  return out;
}

}  // namespace partmatch
