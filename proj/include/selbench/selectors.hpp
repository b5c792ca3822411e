#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "selbench/dataset.hpp"
#include "selbench/errors.hpp"
#include "selbench/forest.hpp"
#include "selbench/sources.hpp"
#include "selbench/stats.hpp"

namespace selbench {

enum class FeatureStatus : std::uint8_t { Undecided, Confirmed, Rejected };

// Result of one selector run. `selected` always equals the Confirmed set;
// Undecided counts as not selected.
struct Selection {
  std::vector<FeatureStatus> status;
  std::vector<std::size_t> selected;
  double wall_clock_s = 0.0;
  int iterations_used = 0;
};

inline void finalize_selection(Selection& s) {
  s.selected.clear();
  for (std::size_t f = 0; f < s.status.size(); ++f)
    if (s.status[f] == FeatureStatus::Confirmed) s.selected.push_back(f);
}

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

enum class MultipleTesting { Holm, Bonferroni, None };

struct BorutaParams {
  double alpha = 0.01;
  int max_iter = 100;
  MultipleTesting correction = MultipleTesting::Holm;
};

// The per-round hit test: each tested feature's hit count over n_rounds
// iterations against Binomial(n_rounds, 1/2), both tails, with the chosen
// multiplicity correction applied across the tested features per tail.
// Returns +1 (significantly many hits), -1 (significantly few), 0 otherwise.
inline std::vector<int> boruta_decisions(const std::vector<int>& hit_counts, int n_rounds,
                                         double alpha, MultipleTesting correction) {
  const std::size_t m = hit_counts.size();
  std::vector<double> p_high(m), p_low(m);
  for (std::size_t i = 0; i < m; ++i) {
    p_high[i] = binomial_tail(hit_counts[i], n_rounds, 0.5);
    p_low[i] = binomial_tail(n_rounds - hit_counts[i], n_rounds, 0.5);  // P(X <= k) at p = 1/2
  }
  const auto rejections = [&](const std::vector<double>& ps) {
    std::vector<bool> mask(m, false);
    switch (correction) {
      case MultipleTesting::Holm:
        return holm_adjust(ps, alpha);
      case MultipleTesting::Bonferroni:
        for (std::size_t i = 0; i < m; ++i) mask[i] = ps[i] <= alpha / static_cast<double>(m);
        return mask;
      default:
        for (std::size_t i = 0; i < m; ++i) mask[i] = ps[i] <= alpha;
        return mask;
    }
  };
  const auto high = rejections(p_high);
  const auto low = rejections(p_low);
  std::vector<int> out(m, 0);
  for (std::size_t i = 0; i < m; ++i) out[i] = high[i] ? 1 : (low[i] ? -1 : 0);
  return out;
}

// Boruta all-relevant selection. Each iteration re-shuffles the shadows of
// every still-present feature, scores the augmented system with the given
// importance source and awards a hit to each undecided feature scoring
// strictly above the best shadow. Hit counts are tested each round;
// significantly-high features are Confirmed (they stay in the system),
// significantly-low ones are Rejected and removed together with their
// shadows. Whatever is still undecided when the iteration budget runs out
// stays Undecided and is treated as not selected.
inline Selection run_boruta(const Dataset& d, const ImportanceSource& src, const BorutaParams& p,
                            RngStream stream) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw ConfigError("boruta: alpha outside (0,1)");
  if (p.max_iter < 1) throw ConfigError("boruta: max_iter must be >= 1");
  detail::Stopwatch clock;

  const std::size_t n_features = d.n_features();
  Selection sel;
  sel.status.assign(n_features, FeatureStatus::Undecided);
  std::vector<int> hits(n_features, 0);

  std::vector<std::size_t> present(n_features);
  std::iota(present.begin(), present.end(), std::size_t{0});

  int rounds = 0;
  while (rounds < p.max_iter) {
    std::vector<std::size_t> live;
    for (std::size_t f : present)
      if (sel.status[f] == FeatureStatus::Undecided) live.push_back(f);
    if (live.empty()) break;

    RngStream iter_stream = stream.fork("iter").fork(static_cast<std::uint64_t>(rounds));
    const Dataset current = subset_columns(d, present);
    Rng shadow_rng = iter_stream.fork("shadows").rng();
    const ShadowedDataset sh = augment_with_shadows(current, shadow_rng);
    const ImportanceVector imp =
        compute_importance(sh.combined, src, iter_stream.fork("importance"));

    double best_shadow = -std::numeric_limits<double>::infinity();
    for (std::size_t j = sh.n_real; j < imp.scores.size(); ++j)
      best_shadow = std::max(best_shadow, imp.scores[j]);

    ++rounds;
    for (std::size_t pos = 0; pos < present.size(); ++pos) {
      const std::size_t f = present[pos];
      if (sel.status[f] == FeatureStatus::Undecided && imp.scores[pos] > best_shadow) ++hits[f];
    }

    std::vector<int> live_hits(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) live_hits[i] = hits[live[i]];
    const auto decisions = boruta_decisions(live_hits, rounds, p.alpha, p.correction);
    bool removed = false;
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (decisions[i] > 0) {
        sel.status[live[i]] = FeatureStatus::Confirmed;
      } else if (decisions[i] < 0) {
        sel.status[live[i]] = FeatureStatus::Rejected;
        removed = true;
      }
    }
    if (removed) {
      std::vector<std::size_t> kept;
      for (std::size_t f : present)
        if (sel.status[f] != FeatureStatus::Rejected) kept.push_back(f);
      present.swap(kept);
    }
  }

  sel.iterations_used = rounds;
  finalize_selection(sel);
  sel.wall_clock_s = clock.seconds();
  return sel;
}

struct RfaceParams {
  int n_iter = 20;
  double alpha = 0.05;
};

// RF-ACE style relevance test: a fixed number of shadow-augmented scoring
// iterations, then per feature a one-sided paired t test of its importance
// against the mean importance of all shadows. Zero-variance differences fall
// back to the sign of the (constant) difference.
inline Selection run_rface(const Dataset& d, const ImportanceSource& src, const RfaceParams& p,
                           RngStream stream) {
  if (p.n_iter < 2) throw ConfigError("rface: need at least 2 iterations for the t test");
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw ConfigError("rface: alpha outside (0,1)");
  detail::Stopwatch clock;

  const std::size_t n_features = d.n_features();
  std::vector<std::vector<double>> diffs(n_features);
  for (auto& v : diffs) v.reserve(p.n_iter);

  for (int it = 0; it < p.n_iter; ++it) {
    RngStream iter_stream = stream.fork("iter").fork(static_cast<std::uint64_t>(it));
    Rng shadow_rng = iter_stream.fork("shadows").rng();
    const ShadowedDataset sh = augment_with_shadows(d, shadow_rng);
    const ImportanceVector imp =
        compute_importance(sh.combined, src, iter_stream.fork("importance"));
    double shadow_mean = 0.0;
    for (std::size_t j = sh.n_real; j < imp.scores.size(); ++j) shadow_mean += imp.scores[j];
    shadow_mean /= static_cast<double>(sh.n_shadows());
    for (std::size_t f = 0; f < n_features; ++f) diffs[f].push_back(imp.scores[f] - shadow_mean);
  }

  Selection sel;
  sel.status.assign(n_features, FeatureStatus::Rejected);
  for (std::size_t f = 0; f < n_features; ++f) {
    if (paired_t_test(diffs[f], TestSide::Greater) < p.alpha)
      sel.status[f] = FeatureStatus::Confirmed;
  }
  sel.iterations_used = p.n_iter;
  finalize_selection(sel);
  sel.wall_clock_s = clock.seconds();
  return sel;
}

struct RfeParams {
  int assess_trees = 500;  // validation forest size per assessment bootstrap
  int assess_boots = 10;
};

struct RfeTrace {
  std::vector<std::size_t> sizes;   // feature count evaluated per round
  std::vector<double> errors;       // mean bootstrap-validation error per round
};

namespace detail {

inline double rfe_assess(const Dataset& d, const RfeParams& p, RngStream stream) {
  double total = 0.0;
  int counted = 0;
  for (int b = 0; b < p.assess_boots; ++b) {
    Rng rng = stream.fork(static_cast<std::uint64_t>(b)).rng();
    const Resample rs = bootstrap_resample(d.n_rows(), rng);
    if (rs.oob_indices.empty()) continue;
    ForestParams fp;
    fp.n_trees = p.assess_trees;
    const ForestModel m =
        train_forest(subset_rows(d, rs.train_indices), fp,
                     stream.fork(static_cast<std::uint64_t>(b)).fork("forest"));
    const Dataset holdout = subset_rows(d, rs.oob_indices);
    const auto pred = predict_forest(m, holdout);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (pred[i] != holdout.labels[i]) ++wrong;
    total += static_cast<double>(wrong) / static_cast<double>(pred.size());
    ++counted;
  }
  return counted == 0 ? 1.0 : total / counted;
}

}  // namespace detail

// Recursive feature elimination: assess the current feature set by bootstrap
// validation of a Random Forest, rank with the importance source, cut to the
// highest power of two strictly below the current count, repeat down to 4,
// and return the set whose assessed error was minimal. Equal errors resolve
// toward the smaller set.
inline Selection run_rfe(const Dataset& d, const ImportanceSource& src, const RfeParams& p,
                         RngStream stream, RfeTrace* trace = nullptr) {
  if (d.n_features() < 4) throw ConfigError("rfe: need at least 4 features");
  if (p.assess_trees < 1 || p.assess_boots < 1) throw ConfigError("rfe: invalid assessment params");
  detail::Stopwatch clock;

  std::vector<std::size_t> current(d.n_features());
  std::iota(current.begin(), current.end(), std::size_t{0});

  std::vector<std::size_t> best_set = current;
  double best_error = std::numeric_limits<double>::infinity();
  int round = 0;
  while (true) {
    const Dataset view = subset_columns(d, current);
    const double err =
        detail::rfe_assess(view, p, stream.fork("assess").fork(static_cast<std::uint64_t>(round)));
    if (trace) {
      trace->sizes.push_back(current.size());
      trace->errors.push_back(err);
    }
    if (err <= best_error) {  // <= prefers the later, smaller set on ties
      best_error = err;
      best_set = current;
    }
    if (current.size() <= 4) break;

    const ImportanceVector imp = compute_importance(
        view, src, stream.fork("rank").fork(static_cast<std::uint64_t>(round)));
    std::size_t target = 4;
    while (target * 2 < current.size()) target *= 2;

    std::vector<std::size_t> order(current.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (imp.scores[a] != imp.scores[b]) return imp.scores[a] > imp.scores[b];
      return a < b;
    });
    std::vector<std::size_t> next;
    next.reserve(target);
    for (std::size_t i = 0; i < target; ++i) next.push_back(current[order[i]]);
    std::sort(next.begin(), next.end());
    current.swap(next);
    ++round;
  }

  Selection sel;
  sel.status.assign(d.n_features(), FeatureStatus::Rejected);
  for (std::size_t f : best_set) sel.status[f] = FeatureStatus::Confirmed;
  sel.iterations_used = round + 1;
  finalize_selection(sel);
  sel.wall_clock_s = clock.seconds();
  return sel;
}

struct RrfParams {
  double lambda = 0.8;  // regularization coefficient in (0,1]
  ForestParams forest;
};

// Regularized Random Forest: trees are grown sequentially against a shared
// used-feature set; a split on a feature outside the set only scores
// lambda times its gain, and winning such a split admits the feature. The
// selection is exactly the used set once the ensemble is finished.
inline Selection run_rrf(const Dataset& d, const RrfParams& p, RngStream stream) {
  if (!(p.lambda > 0.0 && p.lambda <= 1.0)) throw ConfigError("rrf: lambda outside (0,1]");
  if (p.forest.n_trees < 1) throw ConfigError("rrf: n_trees must be >= 1");
  detail::Stopwatch clock;

  const int mtry = resolve_mtry(p.forest, d.n_features());
  ForestParams fp = p.forest;
  fp.mtry = mtry;
  std::vector<char> used(d.n_features(), 0);
  detail::TreeGrower grower(d, fp, mtry);
  grower.set_regularization(&used, p.lambda);
  for (int t = 0; t < p.forest.n_trees; ++t) {
    Rng rng = stream.fork(t).rng();
    const Resample bag = bootstrap_resample(d.n_rows(), rng);
    grower.grow(bag.train_indices, rng);
  }

  Selection sel;
  sel.status.assign(d.n_features(), FeatureStatus::Rejected);
  for (std::size_t f = 0; f < used.size(); ++f)
    if (used[f]) sel.status[f] = FeatureStatus::Confirmed;
  sel.iterations_used = p.forest.n_trees;
  finalize_selection(sel);
  sel.wall_clock_s = clock.seconds();
  return sel;
}

// A selector plus everything needed to run it; the unit the CLI grid and the
// evaluation driver work with.
struct SelectorConfig {
  enum class Kind { Boruta, RfAce, Rfe, Rrf, AllFeatures };

  Kind kind = Kind::Boruta;
  std::string name;
  ImportanceSource source;
  BorutaParams boruta;
  RfaceParams rface;
  RfeParams rfe;
  RrfParams rrf;
};

inline Selection run_selector(const Dataset& d, const SelectorConfig& cfg, RngStream stream) {
  switch (cfg.kind) {
    case SelectorConfig::Kind::Boruta:
      return run_boruta(d, cfg.source, cfg.boruta, stream);
    case SelectorConfig::Kind::RfAce:
      return run_rface(d, cfg.source, cfg.rface, stream);
    case SelectorConfig::Kind::Rfe:
      return run_rfe(d, cfg.source, cfg.rfe, stream);
    case SelectorConfig::Kind::Rrf:
      return run_rrf(d, cfg.rrf, stream);
    default: {
      Selection sel;
      sel.status.assign(d.n_features(), FeatureStatus::Confirmed);
      finalize_selection(sel);
      return sel;
    }
  }
}

}  // namespace selbench
