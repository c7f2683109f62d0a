#pragma once

// Entropy extrema over box credal sets, the additive AU/EU/TU split, the
// zero-one-loss epistemic measure, and EU-ranked instance selection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "credal/box.hpp"
#include "credal/error.hpp"
#include "credal/numeric.hpp"
#include "credal/types.hpp"

namespace credal {

// Largest K for which min_entropy enumerates vertices exactly.
inline constexpr std::size_t kExactMinEntropyMaxK = 15;

struct EntropyExtremum {
  double value;
  ProbabilityVector witness;
  bool heuristic = false;
};

namespace detail {

inline void require_reachable(const BoxCredalSet& box, const char* op) {
  require(box.reachable(), ErrorCode::InvalidInterval, std::string(op) + " needs a reachable box");
}

}  // namespace detail

// Water-filling: p_i = clamp(λ, l_i, u_i) with λ chosen so that Σp = 1.
// Every unclamped coordinate shares the same level, which is the KKT
// condition for maximizing entropy on box ∩ simplex.
inline EntropyExtremum max_entropy(const BoxCredalSet& box) {
  detail::require_reachable(box, "max_entropy");
  const std::size_t kk = box.size();
  auto filled = [&](double level) {
    double s = 0.0;
    for (const auto& iv : box.intervals()) s += std::clamp(level, iv.lower(), iv.upper());
    return s;
  };

  std::vector<double> breaks;
  breaks.reserve(2 * kk);
  for (const auto& iv : box.intervals()) {
    breaks.push_back(iv.lower());
    breaks.push_back(iv.upper());
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  double level = breaks.back();
  double prev = breaks.front();
  double prev_mass = filled(prev);
  if (prev_mass >= 1.0) {
    level = prev;
  } else {
    for (std::size_t b = 1; b < breaks.size(); ++b) {
      const double mass = filled(breaks[b]);
      if (mass >= 1.0) {
        // Linear between consecutive breakpoints.
        level = prev + (1.0 - prev_mass) * (breaks[b] - prev) / (mass - prev_mass);
        break;
      }
      prev = breaks[b];
      prev_mass = mass;
    }
  }

  std::vector<double> p(kk);
  for (std::size_t i = 0; i < kk; ++i) p[i] = std::clamp(level, box[i].lower(), box[i].upper());
  const double h = numeric::entropy(p);
  return {h, validate_probability_vector(std::move(p))};
}

// A feasible vertex, not necessarily the minimizer: start from the lower
// bounds and let the widest intervals take the free mass first. Its entropy
// is an upper bound on the minimum.
inline EntropyExtremum min_entropy_greedy(const BoxCredalSet& box) {
  detail::require_reachable(box, "min_entropy_greedy");
  const std::size_t kk = box.size();
  std::vector<double> p(kk);
  double free_mass = 1.0;
  for (std::size_t i = 0; i < kk; ++i) {
    p[i] = box[i].lower();
    free_mass -= p[i];
  }
  std::vector<std::size_t> order(kk);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return box[a].width() > box[b].width(); });
  for (std::size_t i : order) {
    if (free_mass <= 0.0) break;
    const double grant = std::min(box[i].width(), free_mass);
    p[i] += grant;
    free_mass -= grant;
  }
  const double h = numeric::entropy(p);
  return {h, validate_probability_vector(std::move(p)), true};
}

// Minimum entropy. Entropy is concave, so the minimum sits at a vertex of
// box ∩ simplex; every vertex has at most one coordinate strictly inside its
// interval. min_entropy_exact enumerates all K·2^(K-1) candidates.
inline EntropyExtremum min_entropy_exact(const BoxCredalSet& box) {
  detail::require_reachable(box, "min_entropy_exact");
  const std::size_t kk = box.size();
  require(kk < 8 * sizeof(std::size_t), ErrorCode::InvalidShape, "too many classes for vertex enumeration");
  constexpr double tol = 1e-12;
  double best = numeric::kInf;
  std::vector<double> best_p;
  std::vector<double> p(kk);
  const std::size_t others = kk - 1;
  for (std::size_t free = 0; free < kk; ++free) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << others); ++mask) {
      double used = 0.0;
      for (std::size_t i = 0, bit = 0; i < kk; ++i) {
        if (i == free) continue;
        p[i] = (mask >> bit) & 1u ? box[i].upper() : box[i].lower();
        used += p[i];
        ++bit;
      }
      const double rest = 1.0 - used;
      if (rest < box[free].lower() - tol || rest > box[free].upper() + tol) continue;
      p[free] = std::clamp(rest, box[free].lower(), box[free].upper());
      const double h = numeric::entropy(p);
      if (h < best) {
        best = h;
        best_p = p;
      }
    }
  }
  require(!best_p.empty(), ErrorCode::EmptyBox, "no vertex of box ∩ simplex found");
  // The greedy point is one of these vertices but rounds differently; taking
  // it too keeps greedy >= exact to the last bit.
  const auto g = min_entropy_greedy(box);
  if (g.value < best) return {g.value, g.witness};
  return {best, validate_probability_vector(std::move(best_p))};
}

// Exact up to kExactMinEntropyMaxK classes, greedy (and flagged) above.
inline EntropyExtremum min_entropy(const BoxCredalSet& box) {
  return box.size() > kExactMinEntropyMaxK ? min_entropy_greedy(box) : min_entropy_exact(box);
}

// max over p, p' in the box of  max_k p_k - p_{argmax p'}.
//
// p' only selects a class j that can be an argmax. For fixed (j, k≠j) the
// inner linear program pushes p_k to its top and p_j to its bottom; the pair
// sum must stay inside [1 - Σ_rest u, 1 - Σ_rest l], which only ever forces
// one of the two back toward the middle.
inline double zero_one_eu(const BoxCredalSet& box) {
  detail::require_reachable(box, "zero_one_eu");
  const std::size_t kk = box.size();
  const double sl = box.sum_lower();
  const double su = box.sum_upper();
  double best = 0.0;
  for (std::size_t j = 0; j < kk; ++j) {
    if (!can_be_argmax(box, j)) continue;
    for (std::size_t k = 0; k < kk; ++k) {
      if (k == j) continue;
      const double rest_lower = sl - box[j].lower() - box[k].lower();
      const double rest_upper = su - box[j].upper() - box[k].upper();
      double pk = box[k].upper();
      double pj = box[j].lower();
      if (pk + pj > 1.0 - rest_lower) {
        pk = std::max(box[k].lower(), 1.0 - rest_lower - pj);
      } else if (pk + pj < 1.0 - rest_upper) {
        pj = std::min(box[j].upper(), 1.0 - rest_upper - pk);
      }
      best = std::max(best, pk - pj);
    }
  }
  return std::clamp(best, 0.0, 1.0);
}

// Tightens the box, then au = min entropy, eu = max - min, tu = au + eu.
inline UncertaintyReport uncertainty_report(const BoxCredalSet& box) {
  const BoxCredalSet tight = box.reachable() ? box : tighten_reachable(box);
  const auto hi = max_entropy(tight);
  const auto lo = min_entropy(tight);
  const double eu = std::max(0.0, hi.value - lo.value);
  return UncertaintyReport(lo.value, eu, zero_one_eu(tight), box.size(), lo.heuristic);
}

enum class EuMeasure { Entropy, ZeroOne };

inline EuMeasure parse_eu_measure(const std::string& s) {
  if (s == "entropy" || s == "eu_entropy") return EuMeasure::Entropy;
  if (s == "zero-one" || s == "eu_zero_one") return EuMeasure::ZeroOne;
  throw Error(ErrorCode::InvalidConfig, "unknown uncertainty measure '" + s + "'");
}

inline double epistemic_score(const UncertaintyReport& r, EuMeasure m) {
  return m == EuMeasure::Entropy ? r.eu_entropy() : r.eu_zero_one();
}

// Indices of the m most uncertain boxes, most uncertain first; equal scores
// keep ascending index order.
inline std::vector<std::size_t> rank_by_uncertainty(const std::vector<BoxCredalSet>& boxes, EuMeasure measure,
                                                    std::size_t m) {
  require(m <= boxes.size(), ErrorCode::OutOfRange,
          "asked for " + std::to_string(m) + " of " + std::to_string(boxes.size()) + " instances");
  std::vector<double> score(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) score[i] = epistemic_score(uncertainty_report(boxes[i]), measure);
  std::vector<std::size_t> idx(boxes.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  idx.resize(m);
  return idx;
}

}  // namespace credal
