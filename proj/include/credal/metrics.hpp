#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "credal/box.hpp"
#include "credal/error.hpp"
#include "credal/types.hpp"
#include "credal/uncertainty.hpp"

namespace credal {

// Fraction of instances whose ground-truth distribution lies in its box.
inline double coverage(const std::vector<BoxCredalSet>& boxes, const std::vector<ProbabilityVector>& gts) {
  require(boxes.size() == gts.size(), ErrorCode::LengthMismatch,
          std::to_string(boxes.size()) + " boxes vs " + std::to_string(gts.size()) + " ground truths");
  require(!boxes.empty(), ErrorCode::EmptyList, "coverage of an empty list");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    require(boxes[i].size() == gts[i].size(), ErrorCode::LengthMismatch,
            "class count mismatch at instance " + std::to_string(i));
    if (contains(boxes[i], gts[i])) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(boxes.size());
}

// 1 - mean over instances of the mean interval width.
inline double efficiency(const std::vector<BoxCredalSet>& boxes) {
  require(!boxes.empty(), ErrorCode::EmptyList, "efficiency of an empty list");
  double w = 0.0;
  for (const auto& b : boxes) w += b.mean_width();
  return std::clamp(1.0 - w / static_cast<double>(boxes.size()), 0.0, 1.0);
}

// Mann-Whitney U / (n_pos n_neg) with average ranks for ties: the
// probability that a positive outscores a negative, ties counting one half.
inline double auroc(const std::vector<double>& pos, const std::vector<double>& neg) {
  require(!pos.empty() && !neg.empty(), ErrorCode::EmptyList, "AUROC needs both score lists nonempty");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.push_back({s, true});
  for (double s : neg) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].positive) rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

struct EvaluationRow {
  double alpha;
  std::optional<double> coverage;
  double efficiency;
  std::optional<double> auroc;
};

struct EvaluationSummary {
  std::vector<EvaluationRow> rows;  // ascending alpha
  std::size_t n_instances = 0;
};

inline std::vector<double> epistemic_scores(const std::vector<BoxCredalSet>& boxes, EuMeasure measure,
                                            std::size_t threads = 1) {
  std::vector<double> out(boxes.size());
  parallel_for(boxes.size(), threads,
               [&](std::size_t i) { out[i] = epistemic_score(uncertainty_report(boxes[i]), measure); });
  return out;
}

struct SweepOptions {
  EuMeasure measure = EuMeasure::Entropy;
  bool tightened_efficiency = false;
  std::size_t threads = 1;
};

// One row per fitted alpha: coverage (when ground truth is given),
// efficiency, and AUROC of EU separating OOD from test rows (when OOD logits
// are given).
inline EvaluationSummary pareto_sweep(const DecalibrationModel& model, const LogitMatrix& test,
                                      const std::vector<ProbabilityVector>* gts, const LogitMatrix* ood,
                                      const SweepOptions& opts = {}) {
  if (gts) {
    require(gts->size() == test.rows(), ErrorCode::LengthMismatch, "ground-truth count differs from test rows");
  }
  EvaluationSummary summary;
  summary.n_instances = test.rows();
  for (double alpha : model.alphas()) {
    auto boxes = predict_boxes(model, test, alpha, opts.threads);
    EvaluationRow row{alpha, std::nullopt, 0.0, std::nullopt};
    if (gts) row.coverage = coverage(boxes, *gts);
    if (opts.tightened_efficiency) {
      std::vector<BoxCredalSet> tight;
      tight.reserve(boxes.size());
      for (const auto& b : boxes) tight.push_back(tighten_reachable(b));
      row.efficiency = efficiency(tight);
    } else {
      row.efficiency = efficiency(boxes);
    }
    if (ood) {
      const auto id_scores = epistemic_scores(boxes, opts.measure, opts.threads);
      const auto ood_scores = epistemic_scores(predict_boxes(model, *ood, alpha, opts.threads), opts.measure, opts.threads);
      row.auroc = auroc(ood_scores, id_scores);
    }
    summary.rows.push_back(row);
  }
  return summary;
}

}  // namespace credal
