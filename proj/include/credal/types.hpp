#pragma once

// Validated domain types. Every constructor checks its invariants and throws
// credal::Error on violation; nothing is repaired silently. Instances are
// immutable once built.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "credal/error.hpp"

namespace credal {

// Absolute tolerance on Σp = 1 and on box membership.
inline constexpr double kSimplexTol = 1e-9;

// Dense row-major N×K matrix of finite logits.
class LogitMatrix {
 public:
  LogitMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    require(cols_ >= 2, ErrorCode::InvalidShape, "need at least two classes, got " + std::to_string(cols_));
    require(rows_ >= 1, ErrorCode::InvalidShape, "need at least one row");
    require(values_.size() == rows_ * cols_, ErrorCode::InvalidShape,
            "value count " + std::to_string(values_.size()) + " does not match " + std::to_string(rows_) + "x" +
                std::to_string(cols_));
    for (std::size_t i = 0; i < values_.size(); ++i) {
      require(std::isfinite(values_[i]), ErrorCode::NonFinite,
              "logit at row " + std::to_string(i / cols_) + ", column " + std::to_string(i % cols_) + " is not finite");
    }
  }

  static LogitMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    require(!rows.empty(), ErrorCode::InvalidShape, "need at least one row");
    const std::size_t k = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * k);
    for (const auto& r : rows) {
      require(r.size() == k, ErrorCode::InvalidShape, "ragged logit rows");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return LogitMatrix(rows.size(), k, std::move(flat));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t n) const { return {values_.data() + n * cols_, cols_}; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

// Training evidence: logits plus 0-based labels.
class LabeledLogits {
 public:
  LabeledLogits(LogitMatrix logits, std::vector<std::size_t> labels)
      : logits_(std::move(logits)), labels_(std::move(labels)), class_counts_(logits_.cols(), 0) {
    require(labels_.size() == logits_.rows(), ErrorCode::LengthMismatch,
            "label count " + std::to_string(labels_.size()) + " differs from row count " +
                std::to_string(logits_.rows()));
    for (std::size_t n = 0; n < labels_.size(); ++n) {
      require(labels_[n] < logits_.cols(), ErrorCode::LabelOutOfRange,
              "label " + std::to_string(labels_[n] + 1) + " at row " + std::to_string(n) + " outside 1.." +
                  std::to_string(logits_.cols()));
      ++class_counts_[labels_[n]];
    }
  }

  const LogitMatrix& logits() const { return logits_; }
  std::span<const std::size_t> labels() const { return labels_; }
  std::span<const std::size_t> class_counts() const { return class_counts_; }
  std::size_t size() const { return logits_.rows(); }
  std::size_t num_classes() const { return logits_.cols(); }

  std::size_t classes_present() const {
    return static_cast<std::size_t>(std::count_if(class_counts_.begin(), class_counts_.end(),
                                                  [](std::size_t c) { return c > 0; }));
  }

 private:
  LogitMatrix logits_;
  std::vector<std::size_t> labels_;
  std::vector<std::size_t> class_counts_;
};

class ProbabilityVector {
 public:
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t k) const { return p_[k]; }
  std::span<const double> values() const { return p_; }

  friend ProbabilityVector validate_probability_vector(std::vector<double> p);

 private:
  explicit ProbabilityVector(std::vector<double> p) : p_(std::move(p)) {}
  std::vector<double> p_;
};

// Rejects (never renormalizes) vectors that are off the simplex.
inline ProbabilityVector validate_probability_vector(std::vector<double> p) {
  require(p.size() >= 2, ErrorCode::InvalidShape, "probability vector needs K >= 2 entries");
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    require(std::isfinite(p[k]) && p[k] >= 0.0 && p[k] <= 1.0, ErrorCode::OutOfRange,
            "p_" + std::to_string(k + 1) + " = " + std::to_string(p[k]) + " outside [0,1]");
    sum += p[k];
  }
  require(std::abs(sum - 1.0) <= kSimplexTol, ErrorCode::NotNormalized,
          "entries sum to " + std::to_string(sum));
  return ProbabilityVector(std::move(p));
}

class ProbabilityInterval {
 public:
  ProbabilityInterval(double lower, double upper) : lower_(lower), upper_(upper) {
    require(lower >= 0.0 && lower <= 1.0 && upper >= 0.0 && upper <= 1.0, ErrorCode::OutOfRange,
            "interval [" + std::to_string(lower) + ", " + std::to_string(upper) + "] outside [0,1]");
    require(lower <= upper, ErrorCode::InvalidInterval,
            "lower " + std::to_string(lower) + " exceeds upper " + std::to_string(upper));
  }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double width() const { return upper_ - lower_; }

  friend bool operator==(const ProbabilityInterval&, const ProbabilityInterval&) = default;

 private:
  double lower_;
  double upper_;
};

// K probability intervals for one instance.
//
// Raw boxes (reachable = false) only carry per-interval invariants, so the
// endpoint images can be reported verbatim even when they miss the simplex.
// Reachable boxes are additionally nonempty and coherent: every bound is
// attained by some distribution in box ∩ simplex.
class BoxCredalSet {
 public:
  explicit BoxCredalSet(std::vector<ProbabilityInterval> intervals, bool reachable = false)
      : intervals_(std::move(intervals)), reachable_(reachable) {
    require(intervals_.size() >= 2, ErrorCode::InvalidShape, "box needs K >= 2 intervals");
    if (reachable_) {
      require(intersects_simplex(), ErrorCode::EmptyBox, "reachable box does not intersect the simplex");
      const double sl = sum_lower();
      const double su = sum_upper();
      for (std::size_t k = 0; k < intervals_.size(); ++k) {
        const auto& iv = intervals_[k];
        require(iv.lower() >= 1.0 - (su - iv.upper()) - kSimplexTol &&
                    iv.upper() <= 1.0 - (sl - iv.lower()) + kSimplexTol,
                ErrorCode::InvalidInterval, "interval " + std::to_string(k + 1) + " is not reachable");
      }
    }
  }

  static BoxCredalSet full(std::size_t k) {
    return BoxCredalSet(std::vector<ProbabilityInterval>(k, ProbabilityInterval(0.0, 1.0)), true);
  }

  static BoxCredalSet point(std::span<const double> p) {
    std::vector<ProbabilityInterval> iv;
    iv.reserve(p.size());
    for (double x : p) iv.emplace_back(x, x);
    return BoxCredalSet(std::move(iv), true);
  }

  std::size_t size() const { return intervals_.size(); }
  const ProbabilityInterval& operator[](std::size_t k) const { return intervals_[k]; }
  std::span<const ProbabilityInterval> intervals() const { return intervals_; }
  bool reachable() const { return reachable_; }

  double sum_lower() const {
    double s = 0.0;
    for (const auto& iv : intervals_) s += iv.lower();
    return s;
  }
  double sum_upper() const {
    double s = 0.0;
    for (const auto& iv : intervals_) s += iv.upper();
    return s;
  }
  bool intersects_simplex() const {
    return sum_lower() <= 1.0 + kSimplexTol && sum_upper() >= 1.0 - kSimplexTol;
  }
  double mean_width() const {
    double s = 0.0;
    for (const auto& iv : intervals_) s += iv.width();
    return s / static_cast<double>(intervals_.size());
  }

  friend bool operator==(const BoxCredalSet& a, const BoxCredalSet& b) { return a.intervals_ == b.intervals_; }

 private:
  std::vector<ProbabilityInterval> intervals_;
  bool reachable_;
};

// Relative-likelihood level; alpha = 0 carries log_budget = -inf.
class AlphaLevel {
 public:
  explicit AlphaLevel(double alpha) : alpha_(alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::InvalidAlpha,
            "alpha " + std::to_string(alpha) + " outside [0,1]");
    log_budget_ = alpha == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(alpha);
  }
  double alpha() const { return alpha_; }
  double log_budget() const { return log_budget_; }

  friend bool operator==(const AlphaLevel& a, const AlphaLevel& b) { return a.alpha_ == b.alpha_; }

 private:
  double alpha_;
  double log_budget_;
};

// Shift interval [t_minus, t_plus] along one class axis. Endpoints may be
// infinite; residuals are |Δℓ_k(t) - target| at finite endpoints and 0 at
// infinite ones.
struct ShiftEndpoints {
  double t_minus = 0.0;
  double t_plus = 0.0;
  double residual_minus = 0.0;
  double residual_plus = 0.0;

  void validate() const {
    require(!std::isnan(t_minus) && !std::isnan(t_plus), ErrorCode::NonFinite, "shift endpoint is NaN");
    require(t_minus <= t_plus, ErrorCode::InvalidInterval,
            "t_minus " + std::to_string(t_minus) + " exceeds t_plus " + std::to_string(t_plus));
    require(residual_minus >= 0.0 && residual_plus >= 0.0, ErrorCode::OutOfRange, "negative residual");
  }

  bool contains(const ShiftEndpoints& inner) const {
    return t_minus <= inner.t_minus && inner.t_plus <= t_plus;
  }

  friend bool operator==(const ShiftEndpoints&, const ShiftEndpoints&) = default;
};

enum class BudgetMode { Base, FamilyMle };

inline std::string to_string(BudgetMode m) { return m == BudgetMode::Base ? "base" : "family-mle"; }

inline BudgetMode parse_budget_mode(const std::string& s) {
  if (s == "base") return BudgetMode::Base;
  if (s == "family-mle") return BudgetMode::FamilyMle;
  throw Error(ErrorCode::InvalidConfig, "unknown budget mode '" + s + "'");
}

// Fitted shift endpoints for every (alpha, class) pair.
class DecalibrationModel {
 public:
  struct Level {
    AlphaLevel alpha;
    std::vector<ShiftEndpoints> endpoints;  // one per class

    friend bool operator==(const Level&, const Level&) = default;
  };

  DecalibrationModel(std::size_t num_classes, std::size_t num_train, BudgetMode mode, std::vector<Level> levels,
                     double clamp, double tol)
      : k_(num_classes), n_(num_train), mode_(mode), levels_(std::move(levels)), clamp_(clamp), tol_(tol) {
    require(k_ >= 2, ErrorCode::InvalidShape, "model needs K >= 2");
    require(n_ >= 1, ErrorCode::InvalidShape, "model needs N >= 1");
    require(clamp_ > 0.0 && tol_ > 0.0, ErrorCode::InvalidConfig, "clamp and tolerance must be positive");
    require(!levels_.empty(), ErrorCode::EmptyList, "model has no alpha levels");
    std::sort(levels_.begin(), levels_.end(),
              [](const Level& a, const Level& b) { return a.alpha.alpha() < b.alpha.alpha(); });
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      const auto& lv = levels_[i];
      require(lv.endpoints.size() == k_, ErrorCode::InvalidShape, "endpoint count differs from K");
      if (i > 0) {
        require(levels_[i - 1].alpha.alpha() < lv.alpha.alpha(), ErrorCode::InvalidConfig,
                "duplicate alpha " + std::to_string(lv.alpha.alpha()));
      }
      for (std::size_t k = 0; k < k_; ++k) {
        const auto& e = lv.endpoints[k];
        e.validate();
        if (mode_ == BudgetMode::Base) {
          require(e.t_minus <= 0.0 && e.t_plus >= 0.0, ErrorCode::InvalidInterval,
                  "base-mode shift interval for class " + std::to_string(k + 1) + " excludes 0");
        }
        // Higher alpha must give a sub-interval of every lower alpha.
        if (i > 0) {
          require(levels_[i - 1].endpoints[k].contains(e), ErrorCode::NotNested,
                  "class " + std::to_string(k + 1) + " endpoints at alpha " + std::to_string(lv.alpha.alpha()) +
                      " not nested in alpha " + std::to_string(levels_[i - 1].alpha.alpha()));
        }
      }
    }
  }

  std::size_t num_classes() const { return k_; }
  std::size_t num_train() const { return n_; }
  BudgetMode mode() const { return mode_; }
  double clamp() const { return clamp_; }
  double tol() const { return tol_; }
  std::span<const Level> levels() const { return levels_; }

  std::vector<double> alphas() const {
    std::vector<double> out;
    for (const auto& lv : levels_) out.push_back(lv.alpha.alpha());
    return out;
  }

  const Level& level(double alpha) const {
    for (const auto& lv : levels_) {
      if (lv.alpha.alpha() == alpha) return lv;
    }
    throw Error(ErrorCode::UnknownAlpha, "alpha " + std::to_string(alpha) + " was not fitted");
  }

  const ShiftEndpoints& endpoints(double alpha, std::size_t k) const { return level(alpha).endpoints.at(k); }

  friend bool operator==(const DecalibrationModel&, const DecalibrationModel&) = default;

 private:
  std::size_t k_;
  std::size_t n_;
  BudgetMode mode_;
  std::vector<Level> levels_;
  double clamp_;
  double tol_;
};

// Per-instance uncertainty in nats. tu is stored as au + eu_entropy so the
// additive decomposition holds exactly.
class UncertaintyReport {
 public:
  UncertaintyReport(double au, double eu_entropy, double eu_zero_one, std::size_t num_classes,
                    bool au_heuristic = false)
      : au_(au), eu_entropy_(eu_entropy), tu_(au + eu_entropy), eu_zero_one_(eu_zero_one), au_heuristic_(au_heuristic) {
    constexpr double tol = 1e-12;
    require(au_ >= 0.0 && eu_entropy_ >= 0.0, ErrorCode::OutOfRange, "negative entropy component");
    require(tu_ <= std::log(static_cast<double>(num_classes)) + tol, ErrorCode::OutOfRange,
            "total uncertainty exceeds ln K");
    require(eu_zero_one_ >= 0.0 && eu_zero_one_ <= 1.0, ErrorCode::OutOfRange, "zero-one EU outside [0,1]");
  }

  double au() const { return au_; }
  double eu_entropy() const { return eu_entropy_; }
  double tu() const { return tu_; }
  double eu_zero_one() const { return eu_zero_one_; }
  // True when au came from the greedy min-entropy heuristic (large K).
  bool au_heuristic() const { return au_heuristic_; }

 private:
  double au_;
  double eu_entropy_;
  double tu_;
  double eu_zero_one_;
  bool au_heuristic_;
};

}  // namespace credal
