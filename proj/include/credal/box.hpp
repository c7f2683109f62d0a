#pragma once

// Box credal sets: prediction from a fitted model, coherence tightening, and
// the membership / nesting / argmax queries built on them.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "credal/error.hpp"
#include "credal/likelihood.hpp"
#include "credal/types.hpp"

namespace credal {

// Interval k is the image of [t_k^-, t_k^+] under t -> p_k(z + t·e_k),
// which is increasing, so the endpoints map directly to the bounds.
inline BoxCredalSet predict_box(const DecalibrationModel& model, std::span<const double> z, double alpha) {
  require(z.size() == model.num_classes(), ErrorCode::LengthMismatch,
          "test row has " + std::to_string(z.size()) + " logits, model expects " +
              std::to_string(model.num_classes()));
  const auto& level = model.level(alpha);
  std::vector<ProbabilityInterval> iv;
  iv.reserve(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const auto& e = level.endpoints[k];
    iv.emplace_back(shifted_class_probability(z, k, e.t_minus), shifted_class_probability(z, k, e.t_plus));
  }
  return BoxCredalSet(std::move(iv));
}

inline std::vector<BoxCredalSet> predict_boxes(const DecalibrationModel& model, const LogitMatrix& logits,
                                               double alpha, std::size_t threads = 1) {
  model.level(alpha);
  std::vector<std::optional<BoxCredalSet>> tmp(logits.rows());
  parallel_for(logits.rows(), threads, [&](std::size_t n) { tmp[n].emplace(predict_box(model, logits.row(n), alpha)); });
  std::vector<BoxCredalSet> out;
  out.reserve(tmp.size());
  for (auto& b : tmp) out.push_back(std::move(*b));
  return out;
}

// l'_k = max(l_k, 1 - Σ_{j≠k} u_j), u'_k = min(u_k, 1 - Σ_{j≠k} l_j).
// One pass is closed for probability intervals; box ∩ simplex is unchanged.
inline BoxCredalSet tighten_reachable(const BoxCredalSet& box) {
  if (box.reachable()) return box;
  const double sl = box.sum_lower();
  const double su = box.sum_upper();
  require(sl <= 1.0 + kSimplexTol, ErrorCode::EmptyBox, "sum of lower bounds " + std::to_string(sl) + " exceeds 1");
  require(su >= 1.0 - kSimplexTol, ErrorCode::EmptyBox, "sum of upper bounds " + std::to_string(su) + " below 1");
  std::vector<ProbabilityInterval> iv;
  iv.reserve(box.size());
  for (const auto& b : box.intervals()) {
    double lo = std::clamp(std::max(b.lower(), 1.0 - (su - b.upper())), 0.0, 1.0);
    double hi = std::clamp(std::min(b.upper(), 1.0 - (sl - b.lower())), 0.0, 1.0);
    // Within-tolerance slack can cross the two bounds by a few ulps.
    if (lo > hi) lo = hi = 0.5 * (lo + hi);
    iv.emplace_back(lo, hi);
  }
  return BoxCredalSet(std::move(iv), true);
}

inline bool contains(const BoxCredalSet& box, const ProbabilityVector& p) {
  require(box.size() == p.size(), ErrorCode::LengthMismatch, "box and distribution sizes differ");
  for (std::size_t k = 0; k < box.size(); ++k) {
    if (p[k] < box[k].lower() - kSimplexTol || p[k] > box[k].upper() + kSimplexTol) return false;
  }
  return true;
}

inline bool is_nested(const BoxCredalSet& inner, const BoxCredalSet& outer) {
  require(inner.size() == outer.size(), ErrorCode::LengthMismatch, "box sizes differ");
  constexpr double tol = 1e-12;
  for (std::size_t k = 0; k < inner.size(); ++k) {
    if (inner[k].lower() < outer[k].lower() - tol || inner[k].upper() > outer[k].upper() + tol) return false;
  }
  return true;
}

// Whether some p in box ∩ simplex has p_j >= p_i for all i.
//
// Fix p_j = m. The rest must fit in [l_i, min(u_i, m)] and sum to 1 - m, so
// m must satisfy max_i l_i <= m, m + Σ_{i≠j} l_i <= 1 and
// m + Σ_{i≠j} min(u_i, m) >= 1. The last sum grows with m, so the largest
// admissible m = min(u_j, 1 - Σ_{i≠j} l_i) decides feasibility.
inline bool can_be_argmax(const BoxCredalSet& box, std::size_t j) {
  require(box.reachable(), ErrorCode::InvalidInterval, "can_be_argmax needs a reachable box");
  require(j < box.size(), ErrorCode::OutOfRange, "class index out of range");
  constexpr double tol = 1e-12;
  double rest_lower = 0.0;
  double max_other_lower = 0.0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (i == j) continue;
    rest_lower += box[i].lower();
    max_other_lower = std::max(max_other_lower, box[i].lower());
  }
  const double m = std::min(box[j].upper(), 1.0 - rest_lower);
  if (m < box[j].lower() - tol || m < max_other_lower - tol) return false;
  double mass = m;
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (i != j) mass += std::min(box[i].upper(), m);
  }
  return mass >= 1.0 - tol;
}

}  // namespace credal
