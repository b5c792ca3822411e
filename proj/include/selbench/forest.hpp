#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "selbench/dataset.hpp"
#include "selbench/errors.hpp"
#include "selbench/importance.hpp"
#include "selbench/rng.hpp"

namespace selbench {

struct ForestParams {
  int n_trees = 500;
  int mtry = 0;       // 0 resolves to floor(sqrt(P))
  int min_node = 1;   // nodes smaller than this are not split
  int max_depth = 0;  // 0 means unlimited
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t leaf_class = -1;
  double threshold = 0.0;
  double gain = 0.0;  // count-weighted Gini decrease recorded at this split
};

struct Tree {
  std::vector<TreeNode> nodes;

  // rows go left when value <= threshold
  int predict(const std::vector<std::vector<double>>& columns, std::size_t row) const {
    std::int32_t id = 0;
    while (nodes[id].feature >= 0) {
      const TreeNode& nd = nodes[id];
      id = columns[nd.feature][row] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[id].leaf_class;
  }

  // same walk with one feature's value overridden (permutation importance)
  int predict_override(const std::vector<std::vector<double>>& columns, std::size_t row,
                       std::int32_t feature, double value) const {
    std::int32_t id = 0;
    while (nodes[id].feature >= 0) {
      const TreeNode& nd = nodes[id];
      const double v = nd.feature == feature ? value : columns[nd.feature][row];
      id = v <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[id].leaf_class;
  }

  std::vector<std::int32_t> used_features() const {
    std::set<std::int32_t> s;
    for (const TreeNode& nd : nodes)
      if (nd.feature >= 0) s.insert(nd.feature);
    return {s.begin(), s.end()};
  }
};

struct ForestModel {
  std::vector<Tree> trees;
  std::vector<Resample> bags;        // one per tree
  std::vector<int> oob_correct;      // per-tree correct count on its OOB rows
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  ForestParams params;
};

namespace detail {

// Grows CART classification trees on bootstrap bags. Split search is exact:
// the mtry candidate features are scanned over all midpoints between adjacent
// distinct values; ties in Gini decrease break toward the lowest feature
// index, then the lowest threshold, so training is deterministic given the
// per-tree stream.
class TreeGrower {
 public:
  TreeGrower(const Dataset& d, const ForestParams& p, int mtry)
      : d_(d), params_(p), mtry_(mtry), n_classes_(d.n_classes()) {
    feature_pool_.resize(d.n_features());
    for (std::size_t j = 0; j < feature_pool_.size(); ++j)
      feature_pool_[j] = static_cast<std::int32_t>(j);
    counts_left_.resize(n_classes_);
  }

  // lambda < 1 with a used-feature set enables regularized growth: a split on
  // a feature outside `used` only scores lambda times its gain, and the set
  // is extended whenever such a split wins.
  void set_regularization(std::vector<char>* used, double lambda) {
    reg_used_ = used;
    reg_lambda_ = lambda;
  }

  Tree grow(const std::vector<std::uint32_t>& bag_rows, Rng& rng) {
    rows_ = bag_rows;
    tree_.nodes.clear();
    rng_ = &rng;
    build(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  // builds the subtree over rows_[begin, end); returns its node id
  std::int32_t build(std::size_t begin, std::size_t end, int depth) {
    const std::size_t n = end - begin;
    std::vector<double> counts(n_classes_, 0.0);
    for (std::size_t i = begin; i < end; ++i) counts[d_.labels[rows_[i]]] += 1.0;

    int majority = 0;
    for (std::size_t c = 1; c < n_classes_; ++c)
      if (counts[c] > counts[majority]) majority = static_cast<int>(c);
    bool pure = counts[majority] == static_cast<double>(n);

    const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
    if (pure || n < static_cast<std::size_t>(params_.min_node) || n < 2 || depth_capped)
      return make_leaf(majority);

    // parent score sum(c^2)/n; maximizing the children's score sum maximizes
    // the count-weighted Gini decrease
    double parent_score = 0.0;
    for (double c : counts) parent_score += c * c;
    parent_score /= static_cast<double>(n);

    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    double best_score = parent_score;
    double best_penalized = 0.0;

    const std::size_t p = feature_pool_.size();
    const int m = std::min<std::size_t>(mtry_, p);
    for (int c = 0; c < m; ++c) {
      const std::size_t pick = c + rng_->uniform_index(p - c);
      std::swap(feature_pool_[c], feature_pool_[pick]);
    }

    for (int c = 0; c < m; ++c) {
      const std::int32_t f = feature_pool_[c];
      scan_feature(f, begin, end, counts, parent_score, best_feature, best_threshold, best_score,
                   best_penalized);
    }

    if (best_feature < 0) return make_leaf(majority);

    if (reg_used_ && !(*reg_used_)[best_feature]) (*reg_used_)[best_feature] = 1;

    const double gain =
        best_score - parent_score;  // == n*G(parent) - nl*G(l) - nr*G(r), >= 0

    const std::int32_t id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[id].feature = best_feature;
    tree_.nodes[id].threshold = best_threshold;
    tree_.nodes[id].gain = gain;

    const std::size_t mid = partition_rows(begin, end, best_feature, best_threshold);
    const std::int32_t left = build(begin, mid, depth + 1);
    const std::int32_t right = build(mid, end, depth + 1);
    tree_.nodes[id].left = left;
    tree_.nodes[id].right = right;
    return id;
  }

  void scan_feature(std::int32_t f, std::size_t begin, std::size_t end,
                    const std::vector<double>& parent_counts, double parent_score,
                    std::int32_t& best_feature, double& best_threshold, double& best_score,
                    double& best_penalized) {
    const std::size_t n = end - begin;
    scratch_.clear();
    const auto& col = d_.columns[f];
    for (std::size_t i = begin; i < end; ++i)
      scratch_.emplace_back(col[rows_[i]], d_.labels[rows_[i]]);
    std::sort(scratch_.begin(), scratch_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (scratch_.front().first == scratch_.back().first) return;  // constant within node

    std::fill(counts_left_.begin(), counts_left_.end(), 0.0);
    double sum_left = 0.0;  // sum of squared counts on the left
    double sum_right = 0.0;
    for (std::size_t c = 0; c < n_classes_; ++c) sum_right += parent_counts[c] * parent_counts[c];

    const double penalty =
        reg_used_ && !(*reg_used_)[f] ? reg_lambda_ : 1.0;

    double feat_best_score = 0.0;
    double feat_best_threshold = 0.0;
    bool feat_found = false;
    std::size_t nl = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const int label = scratch_[i].second;
      sum_left += 2.0 * counts_left_[label] + 1.0;
      const double pc = parent_counts[label] - counts_left_[label];
      sum_right -= 2.0 * pc - 1.0;
      counts_left_[label] += 1.0;
      ++nl;
      if (scratch_[i].first == scratch_[i + 1].first) continue;
      const double score = sum_left / static_cast<double>(nl) +
                           sum_right / static_cast<double>(n - nl);
      if (!feat_found || score > feat_best_score) {
        feat_found = true;
        feat_best_score = score;
        feat_best_threshold = (scratch_[i].first + scratch_[i + 1].first) / 2.0;
      }
    }
    if (!feat_found) return;

    const double gain = feat_best_score - parent_score;
    if (gain <= 0.0) return;
    const double penalized = penalty * gain;
    const bool better = best_feature < 0 || penalized > best_penalized ||
                        (penalized == best_penalized && f < best_feature);
    if (better) {
      best_feature = f;
      best_threshold = feat_best_threshold;
      best_score = feat_best_score;
      best_penalized = penalized;
    }
  }

  std::size_t partition_rows(std::size_t begin, std::size_t end, std::int32_t f, double thr) {
    const auto& col = d_.columns[f];
    std::size_t i = begin;
    for (std::size_t j = begin; j < end; ++j) {
      if (col[rows_[j]] <= thr) std::swap(rows_[i++], rows_[j]);
    }
    return i;
  }

  std::int32_t make_leaf(int cls) {
    const std::int32_t id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[id].leaf_class = cls;
    return id;
  }

  const Dataset& d_;
  const ForestParams& params_;
  int mtry_;
  std::size_t n_classes_;
  Tree tree_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::int32_t> feature_pool_;
  std::vector<std::pair<double, int>> scratch_;
  std::vector<double> counts_left_;
  Rng* rng_ = nullptr;
  std::vector<char>* reg_used_ = nullptr;
  double reg_lambda_ = 1.0;
};

}  // namespace detail

inline int resolve_mtry(const ForestParams& p, std::size_t n_features) {
  if (p.mtry > 0) {
    if (static_cast<std::size_t>(p.mtry) > n_features)
      throw ConfigError("forest: mtry exceeds feature count");
    return p.mtry;
  }
  return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))));
}

inline ForestModel train_forest(const Dataset& d, const ForestParams& p, RngStream stream) {
  if (p.n_trees < 1) throw ConfigError("forest: n_trees must be >= 1");
  if (p.min_node < 1) throw ConfigError("forest: min_node must be >= 1");
  const int mtry = resolve_mtry(p, d.n_features());

  ForestModel m;
  m.n_features = d.n_features();
  m.n_classes = d.n_classes();
  m.params = p;
  m.params.mtry = mtry;
  m.trees.resize(p.n_trees);
  m.bags.resize(p.n_trees);
  m.oob_correct.assign(p.n_trees, 0);

  detail::TreeGrower grower(d, m.params, mtry);
  for (int t = 0; t < p.n_trees; ++t) {
    Rng rng = stream.fork(t).rng();
    m.bags[t] = bootstrap_resample(d.n_rows(), rng);
    m.trees[t] = grower.grow(m.bags[t].train_indices, rng);
    int correct = 0;
    for (std::uint32_t r : m.bags[t].oob_indices)
      if (m.trees[t].predict(d.columns, r) == d.labels[r]) ++correct;
    m.oob_correct[t] = correct;
  }
  return m;
}

// Plurality vote over trees; ties break to the smallest class index.
inline std::vector<int> predict_forest(const ForestModel& m,
                                       const std::vector<std::vector<double>>& columns) {
  if (columns.size() != m.n_features) throw ConfigError("predict_forest: column count mismatch");
  const std::size_t n = columns.empty() ? 0 : columns[0].size();
  std::vector<int> out(n);
  std::vector<int> votes(m.n_classes);
  for (std::size_t r = 0; r < n; ++r) {
    std::fill(votes.begin(), votes.end(), 0);
    for (const Tree& t : m.trees) ++votes[t.predict(columns, r)];
    int best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c)
      if (votes[c] > votes[best]) best = static_cast<int>(c);
    out[r] = best;
  }
  return out;
}

inline std::vector<int> predict_forest(const ForestModel& m, const Dataset& d) {
  return predict_forest(m, d.columns);
}

// Ensemble out-of-bag error: per row, majority over the trees that did not
// train on it. Rows that were in every bag are skipped.
inline double forest_oob_error(const ForestModel& m, const Dataset& d) {
  const std::size_t n = d.n_rows();
  std::vector<std::vector<int>> votes(n, std::vector<int>(m.n_classes, 0));
  std::vector<char> seen(n, 0);
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    for (std::uint32_t r : m.bags[t].oob_indices) {
      ++votes[r][m.trees[t].predict(d.columns, r)];
      seen[r] = 1;
    }
  }
  std::size_t evaluated = 0, wrong = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!seen[r]) continue;
    ++evaluated;
    int best = 0;
    for (std::size_t c = 1; c < m.n_classes; ++c)
      if (votes[r][c] > votes[r][best]) best = static_cast<int>(c);
    if (best != d.labels[r]) ++wrong;
  }
  return evaluated == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(evaluated);
}

// Accuracy drop on one tree's OOB rows when `feature` is permuted by `perm`
// (perm maps OOB position to OOB position). The identity permutation gives
// exactly zero.
inline double tree_permutation_delta(const Tree& tree, const Dataset& d, const Resample& bag,
                                     int baseline_correct, std::int32_t feature,
                                     const std::vector<std::size_t>& perm) {
  const auto& oob = bag.oob_indices;
  if (oob.empty()) return 0.0;
  const auto& col = d.columns[feature];
  int correct = 0;
  for (std::size_t i = 0; i < oob.size(); ++i) {
    const double value = col[oob[perm[i]]];
    if (tree.predict_override(d.columns, oob[i], feature, value) == d.labels[oob[i]]) ++correct;
  }
  return static_cast<double>(baseline_correct - correct) / static_cast<double>(oob.size());
}

enum class ForestMeasure { Gini, Raw, Normalized };

// The three forest importance measures. Gini importance sums the recorded
// split decreases per feature. Raw permutation importance averages the
// per-tree OOB accuracy drop after permuting the feature within the OOB rows
// (one permutation per tree and feature, each from a pre-assigned substream).
// Normalized divides by the population standard deviation of those per-tree
// drops, with 0/0 defined as 0. Trees with an empty OOB set are left out of
// both moments.
inline ImportanceVector forest_importance(const ForestModel& m, const Dataset& d,
                                          ForestMeasure measure, RngStream stream) {
  if (d.n_features() != m.n_features || d.n_rows() == 0)
    throw ConfigError("forest_importance: dataset shape mismatch");
  const std::size_t p = m.n_features;
  ImportanceVector out;
  out.scores.assign(p, 0.0);

  if (measure == ForestMeasure::Gini) {
    out.source = "forest_gini";
    for (const Tree& t : m.trees)
      for (const TreeNode& nd : t.nodes)
        if (nd.feature >= 0) out.scores[nd.feature] += nd.gain;
    return out;
  }

  std::vector<double> sum(p, 0.0), sumsq(p, 0.0);
  std::size_t trees_with_oob = 0;
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    const auto& oob = m.bags[t].oob_indices;
    if (oob.empty()) continue;
    ++trees_with_oob;
    RngStream tree_stream = stream.fork(t);
    for (std::int32_t f : m.trees[t].used_features()) {
      Rng rng = tree_stream.fork(static_cast<std::uint64_t>(f)).rng();
      const auto perm = rng.permutation(oob.size());
      const double delta =
          tree_permutation_delta(m.trees[t], d, m.bags[t], m.oob_correct[t], f, perm);
      sum[f] += delta;
      sumsq[f] += delta * delta;
    }
  }

  if (trees_with_oob == 0) {
    out.source = measure == ForestMeasure::Raw ? "forest_raw" : "forest_normalized";
    return out;
  }
  const double nt = static_cast<double>(trees_with_oob);
  for (std::size_t f = 0; f < p; ++f) {
    const double mean = sum[f] / nt;
    if (measure == ForestMeasure::Raw) {
      out.scores[f] = mean;
    } else {
      const double var = std::max(0.0, sumsq[f] / nt - mean * mean);
      const double sd = std::sqrt(var);
      out.scores[f] = sd == 0.0 ? 0.0 : mean / sd;
    }
  }
  out.source = measure == ForestMeasure::Raw ? "forest_raw" : "forest_normalized";
  return out;
}

}  // namespace selbench
