#pragma once

#include <string>

#include "selbench/ferns.hpp"
#include "selbench/forest.hpp"

namespace selbench {

// An importance source a selector can be parameterized with: one of the three
// forest measures, or the ferns score at a given depth. The ensemble is
// trained fresh on whatever dataset the selector hands over (usually a
// shadow-augmented one), from substreams of the stream the selector assigns.
struct ImportanceSource {
  enum class Kind { Forest, Ferns };

  Kind kind = Kind::Forest;
  ForestMeasure measure = ForestMeasure::Raw;  // forest only
  int ferns_depth = 5;                         // ferns only
  int ensemble_size = 500;                     // trees or ferns
  int mtry = 0;                                // forest only, 0 = floor(sqrt(P))
  FernsImportanceOptions ferns_options;

  std::string tag() const {
    if (kind == Kind::Ferns) return "ferns_d" + std::to_string(ferns_depth);
    switch (measure) {
      case ForestMeasure::Gini: return "rf_gini";
      case ForestMeasure::Raw: return "rf_raw";
      default: return "rf_norm";
    }
  }
};

inline ImportanceVector compute_importance(const Dataset& d, const ImportanceSource& src,
                                           RngStream stream) {
  if (src.kind == ImportanceSource::Kind::Forest) {
    ForestParams p;
    p.n_trees = src.ensemble_size;
    p.mtry = src.mtry;
    ForestModel m = train_forest(d, p, stream.fork("train"));
    return forest_importance(m, d, src.measure, stream.fork("importance"));
  }
  FernsParams p;
  p.depth = src.ferns_depth;
  p.n_ferns = src.ensemble_size;
  FernsModel m = train_ferns(d, p, stream.fork("train"));
  return ferns_importance(m, d, stream.fork("importance"), src.ferns_options);
}

}  // namespace selbench
