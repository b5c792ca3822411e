#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "selbench/errors.hpp"
#include "selbench/rng.hpp"

namespace selbench {

// Column-major numeric matrix with categorical labels. Class identifiers are
// opaque strings; the class index order is the lexicographic order of the
// distinct labels, which fixes all tie-breaking downstream. Immutable by
// convention after construction, so it can be shared across workers.
struct Dataset {
  std::vector<std::vector<double>> columns;  // P columns of N values
  std::vector<int> labels;                   // N class indices
  std::vector<std::string> feature_names;    // P unique names
  std::vector<std::string> class_names;      // K distinct, sorted

  std::size_t n_rows() const { return labels.size(); }
  std::size_t n_features() const { return columns.size(); }
  std::size_t n_classes() const { return class_names.size(); }
};

inline void validate_dataset(const Dataset& d) {
  if (d.n_rows() < 2) throw DataError("dataset: need at least 2 rows");
  if (d.n_features() < 1) throw DataError("dataset: need at least 1 feature");
  if (d.feature_names.size() != d.n_features())
    throw DataError("dataset: feature name count mismatch");
  for (const auto& col : d.columns) {
    if (col.size() != d.n_rows()) throw DataError("dataset: ragged columns");
    for (double v : col)
      if (!std::isfinite(v)) throw DataError("dataset: non-finite value");
  }
  if (d.n_classes() < 2) throw DataError("dataset: need at least 2 classes");
  std::vector<bool> seen(d.n_classes(), false);
  for (int c : d.labels) {
    if (c < 0 || static_cast<std::size_t>(c) >= d.n_classes())
      throw DataError("dataset: label index out of range");
    seen[c] = true;
  }
  for (bool s : seen)
    if (!s) throw DataError("dataset: class with no occurrence");
  std::set<std::string> names(d.feature_names.begin(), d.feature_names.end());
  if (names.size() != d.feature_names.size())
    throw DataError("dataset: duplicate feature names");
}

// Builds a Dataset from raw string labels, assigning class indices by sorted
// label order.
inline Dataset make_dataset(std::vector<std::vector<double>> columns,
                            const std::vector<std::string>& raw_labels,
                            std::vector<std::string> feature_names) {
  Dataset d;
  d.columns = std::move(columns);
  d.feature_names = std::move(feature_names);
  std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
  d.class_names.assign(distinct.begin(), distinct.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < d.class_names.size(); ++i)
    index[d.class_names[i]] = static_cast<int>(i);
  d.labels.reserve(raw_labels.size());
  for (const auto& l : raw_labels) d.labels.push_back(index[l]);
  validate_dataset(d);
  return d;
}

// One bootstrap draw: n training indices with replacement plus the sorted
// out-of-bag complement.
struct Resample {
  std::vector<std::uint32_t> train_indices;  // size n, duplicates kept
  std::vector<std::uint32_t> oob_indices;    // sorted, disjoint from train
};

inline Resample bootstrap_resample(std::size_t n, Rng& rng) {
  if (n < 2) throw ConfigError("bootstrap_resample: need n >= 2");
  Resample r;
  r.train_indices.resize(n);
  std::vector<bool> in_bag(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t draw = rng.uniform_index(n);
    r.train_indices[i] = static_cast<std::uint32_t>(draw);
    in_bag[draw] = true;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!in_bag[i]) r.oob_indices.push_back(static_cast<std::uint32_t>(i));
  return r;
}

// Shadow-augmented dataset: the base columns followed by permuted copies.
// When the base has fewer than five columns the shadows are replicated
// round-robin (fresh permutations) up to five so the shadow maximum stays a
// meaningful yardstick.
struct ShadowedDataset {
  Dataset combined;                         // P real columns, then S shadows
  std::size_t n_real = 0;                   // P
  std::vector<std::size_t> shadow_origin;   // shadow -> source column

  std::size_t n_shadows() const { return shadow_origin.size(); }
};

inline ShadowedDataset augment_with_shadows(const Dataset& d, Rng& rng) {
  const std::size_t p = d.n_features();
  const std::size_t s = std::max<std::size_t>(p, 5);
  ShadowedDataset out;
  out.combined = d;
  out.n_real = p;
  out.combined.columns.reserve(p + s);
  out.combined.feature_names.reserve(p + s);
  std::vector<std::size_t> copies(p, 0);
  for (std::size_t j = 0; j < s; ++j) {
    const std::size_t src = j % p;
    std::vector<double> shadow = d.columns[src];
    rng.shuffle(shadow);
    out.combined.columns.push_back(std::move(shadow));
    std::string name = "shadow_" + d.feature_names[src];
    if (copies[src] > 0) name += "_" + std::to_string(copies[src] + 1);
    ++copies[src];
    out.combined.feature_names.push_back(std::move(name));
    out.shadow_origin.push_back(src);
  }
  return out;
}

// Row view materialized as a new dataset; duplicates are kept, which is what
// bagging wants. Class table is preserved even if a class drops out of the
// sample, so label indices keep their meaning relative to the source.
inline Dataset subset_rows(const Dataset& d, const std::vector<std::uint32_t>& rows) {
  Dataset out;
  out.feature_names = d.feature_names;
  out.class_names = d.class_names;
  out.columns.resize(d.n_features());
  for (std::size_t j = 0; j < d.n_features(); ++j) {
    out.columns[j].reserve(rows.size());
    for (std::uint32_t r : rows) out.columns[j].push_back(d.columns[j][r]);
  }
  out.labels.reserve(rows.size());
  for (std::uint32_t r : rows) out.labels.push_back(d.labels[r]);
  return out;
}

inline Dataset subset_columns(const Dataset& d, const std::vector<std::size_t>& cols) {
  Dataset out;
  out.labels = d.labels;
  out.class_names = d.class_names;
  for (std::size_t j : cols) {
    out.columns.push_back(d.columns[j]);
    out.feature_names.push_back(d.feature_names[j]);
  }
  return out;
}

}  // namespace selbench
