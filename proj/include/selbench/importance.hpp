#pragma once

#include <string>
#include <vector>

namespace selbench {

// Per-feature relevance scores from one importance source.
struct ImportanceVector {
  std::vector<double> scores;  // one per feature, all finite
  std::string source;          // measure tag plus parameters
};

}  // namespace selbench
