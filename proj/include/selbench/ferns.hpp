#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "selbench/dataset.hpp"
#include "selbench/errors.hpp"
#include "selbench/importance.hpp"
#include "selbench/rng.hpp"

namespace selbench {

struct FernsParams {
  int depth = 5;       // 1..16 feature tests per fern
  int n_ferns = 1000;
};

// One fern: a fixed-depth stack of (feature, threshold) tests. A row's leaf
// index packs one bit per level (bit l set when value < threshold). Leaves
// hold log class probabilities, add-one smoothed over the bag rows that
// landed there, so no leaf probability is ever zero.
struct Fern {
  std::vector<std::int32_t> features;    // D entries, repeats allowed
  std::vector<double> thresholds;        // D entries
  std::vector<double> leaf_logp;         // (2^D x K), leaf-major
  std::vector<std::uint16_t> bag_count;  // per training row draw count

  std::size_t leaf_index(const std::vector<std::vector<double>>& columns, std::size_t row) const {
    std::size_t leaf = 0;
    for (std::size_t l = 0; l < features.size(); ++l)
      if (columns[features[l]][row] < thresholds[l]) leaf |= std::size_t{1} << l;
    return leaf;
  }

  bool uses_feature(std::int32_t f) const {
    return std::find(features.begin(), features.end(), f) != features.end();
  }

  std::vector<std::int32_t> distinct_features() const {
    std::vector<std::int32_t> fs(features);
    std::sort(fs.begin(), fs.end());
    fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
    return fs;
  }

  std::vector<std::uint32_t> oob_rows() const {
    std::vector<std::uint32_t> oob;
    for (std::size_t i = 0; i < bag_count.size(); ++i)
      if (bag_count[i] == 0) oob.push_back(static_cast<std::uint32_t>(i));
    return oob;
  }
};

struct FernsModel {
  std::vector<Fern> ferns;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  FernsParams params;
};

inline FernsModel train_ferns(const Dataset& d, const FernsParams& p, RngStream stream) {
  if (p.depth < 1 || p.depth > 16) throw ConfigError("ferns: depth must be in 1..16");
  if (p.n_ferns < 1) throw ConfigError("ferns: n_ferns must be >= 1");
  const std::size_t n = d.n_rows();
  const std::size_t k = d.n_classes();
  const std::size_t n_leaves = std::size_t{1} << p.depth;

  FernsModel m;
  m.n_features = d.n_features();
  m.n_classes = k;
  m.params = p;
  m.ferns.resize(p.n_ferns);

  std::vector<std::uint32_t> bag(n);
  std::vector<double> counts(n_leaves * k);
  for (int i = 0; i < p.n_ferns; ++i) {
    Rng rng = stream.fork(i).rng();
    Fern& fern = m.ferns[i];
    fern.bag_count.assign(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
      bag[j] = static_cast<std::uint32_t>(rng.uniform_index(n));
      ++fern.bag_count[bag[j]];
    }
    fern.features.resize(p.depth);
    fern.thresholds.resize(p.depth);
    for (int l = 0; l < p.depth; ++l) {
      fern.features[l] = static_cast<std::int32_t>(rng.uniform_index(d.n_features()));
      // threshold taken from the value of a uniformly drawn bag object
      fern.thresholds[l] = d.columns[fern.features[l]][bag[rng.uniform_index(n)]];
    }
    std::fill(counts.begin(), counts.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t leaf = fern.leaf_index(d.columns, bag[j]);
      counts[leaf * k + d.labels[bag[j]]] += 1.0;
    }
    fern.leaf_logp.resize(n_leaves * k);
    for (std::size_t leaf = 0; leaf < n_leaves; ++leaf) {
      double total = 0.0;
      for (std::size_t c = 0; c < k; ++c) total += counts[leaf * k + c];
      for (std::size_t c = 0; c < k; ++c) {
        fern.leaf_logp[leaf * k + c] =
            std::log((counts[leaf * k + c] + 1.0) / (total + static_cast<double>(k)));
      }
    }
  }
  return m;
}

// Maximum a-posteriori vote: leaf log-probability vectors summed over ferns,
// argmax per row, ties to the smallest class index.
inline std::vector<int> predict_ferns(const FernsModel& m,
                                      const std::vector<std::vector<double>>& columns) {
  if (columns.size() != m.n_features) throw ConfigError("predict_ferns: column count mismatch");
  const std::size_t n = columns.empty() ? 0 : columns[0].size();
  const std::size_t k = m.n_classes;
  std::vector<int> out(n);
  std::vector<double> score(k);
  for (std::size_t r = 0; r < n; ++r) {
    std::fill(score.begin(), score.end(), 0.0);
    for (const Fern& fern : m.ferns) {
      const double* leaf = &fern.leaf_logp[fern.leaf_index(columns, r) * k];
      for (std::size_t c = 0; c < k; ++c) score[c] += leaf[c];
    }
    int best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (score[c] > score[best]) best = static_cast<int>(c);
    out[r] = best;
  }
  return out;
}

inline std::vector<int> predict_ferns(const FernsModel& m, const Dataset& d) {
  return predict_ferns(m, d.columns);
}

inline double ferns_oob_error(const FernsModel& m, const Dataset& d) {
  const std::size_t n = d.n_rows();
  const std::size_t k = m.n_classes;
  std::vector<std::vector<double>> score(n, std::vector<double>(k, 0.0));
  std::vector<char> seen(n, 0);
  for (const Fern& fern : m.ferns) {
    for (std::uint32_t r : fern.oob_rows()) {
      const double* leaf = &fern.leaf_logp[fern.leaf_index(d.columns, r) * k];
      for (std::size_t c = 0; c < k; ++c) score[r][c] += leaf[c];
      seen[r] = 1;
    }
  }
  std::size_t evaluated = 0, wrong = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!seen[r]) continue;
    ++evaluated;
    int best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (score[r][c] > score[r][best]) best = static_cast<int>(c);
    if (best != d.labels[r]) ++wrong;
  }
  return evaluated == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(evaluated);
}

struct FernsImportanceOptions {
  bool log_scale = true;     // false compares linear-scale probabilities
  bool per_use_mean = true;  // false averages over the whole ensemble instead
};

// Drop in mean correct-class (log-)probability on one fern's OOB rows when
// `feature` is permuted by `perm` over those rows. Exactly zero for the
// identity permutation.
inline double fern_permutation_delta(const Fern& fern, const Dataset& d,
                                     const std::vector<std::uint32_t>& oob, std::int32_t feature,
                                     const std::vector<std::size_t>& perm, bool log_scale) {
  if (oob.empty()) return 0.0;
  const std::size_t k = d.n_classes();
  const auto& col = d.columns[feature];
  double delta = 0.0;
  for (std::size_t i = 0; i < oob.size(); ++i) {
    const std::size_t orig_leaf = fern.leaf_index(d.columns, oob[i]);
    std::size_t perm_leaf = orig_leaf;
    const double v = col[oob[perm[i]]];
    for (std::size_t l = 0; l < fern.features.size(); ++l) {
      if (fern.features[l] != feature) continue;
      const std::size_t bit = std::size_t{1} << l;
      perm_leaf = v < fern.thresholds[l] ? (perm_leaf | bit) : (perm_leaf & ~bit);
    }
    const double lp_orig = fern.leaf_logp[orig_leaf * k + d.labels[oob[i]]];
    const double lp_perm = fern.leaf_logp[perm_leaf * k + d.labels[oob[i]]];
    delta += log_scale ? lp_orig - lp_perm : std::exp(lp_orig) - std::exp(lp_perm);
  }
  return delta / static_cast<double>(oob.size());
}

// OOB correct-class probability importance: for every fern and every distinct
// feature it tests, the mean drop after permuting that feature among the
// fern's OOB rows; a feature's score averages its contributions over the
// ferns that use it. Features no fern drew score exactly zero.
inline ImportanceVector ferns_importance(const FernsModel& m, const Dataset& d, RngStream stream,
                                         const FernsImportanceOptions& opt = {}) {
  if (d.n_features() != m.n_features) throw ConfigError("ferns_importance: shape mismatch");
  const std::size_t p = m.n_features;
  std::vector<double> sum(p, 0.0);
  std::vector<std::size_t> uses(p, 0);
  for (std::size_t i = 0; i < m.ferns.size(); ++i) {
    const Fern& fern = m.ferns[i];
    const auto oob = fern.oob_rows();
    if (oob.empty()) continue;
    RngStream fern_stream = stream.fork(i);
    for (std::int32_t f : fern.distinct_features()) {
      Rng rng = fern_stream.fork(static_cast<std::uint64_t>(f)).rng();
      const auto perm = rng.permutation(oob.size());
      sum[f] += fern_permutation_delta(fern, d, oob, f, perm, opt.log_scale);
      ++uses[f];
    }
  }
  ImportanceVector out;
  out.scores.assign(p, 0.0);
  for (std::size_t f = 0; f < p; ++f) {
    if (uses[f] == 0) continue;
    const double denom = opt.per_use_mean ? static_cast<double>(uses[f])
                                          : static_cast<double>(m.ferns.size());
    out.scores[f] = sum[f] / denom;
  }
  out.source = "ferns_d" + std::to_string(m.params.depth);
  return out;
}

}  // namespace selbench
