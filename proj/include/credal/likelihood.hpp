#pragma once

// Relative log-likelihood of the global logit-bias family and the endpoint
// programs that turn a likelihood budget into per-class shift intervals.
//
// For a shift c ∈ R^K added to every logit row,
//
//   Δℓ(c) = Σ_n [ log p_{y_n}(z_n + c) - log p_{y_n}(z_n) ],
//
// which is concave, invariant under c -> c + t·1, and zero at c = 0. Along a
// single class axis c = t·e_k it depends on each row only through the
// one-vs-rest logit r_n = z_nk - logsumexp_{j≠k} z_nj:
//
//   Δℓ_k(t) = N_k·t - Σ_n [ softplus(r_n + t) - softplus(r_n) ],
//
// whose derivative N_k - Σ_n σ(r_n + t) is strictly decreasing. Each endpoint
// of {t : Δℓ_k(t) >= log α} is therefore a single bracketed root.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "credal/error.hpp"
#include "credal/numeric.hpp"
#include "credal/parallel.hpp"
#include "credal/types.hpp"

namespace credal {

struct SolverConfig {
  // Absolute tolerance on |Δℓ_k(t) - log α| at returned endpoints. Unset
  // means 1e-10·N for the data being fitted.
  std::optional<double> tol_delta;
  double tol_t = 1e-12;  // bracket width, relative to max(1, |t|)
  double clamp = 10000.0;
  int max_iter = 200;
  double bracket_init = 1.0;

  void validate() const {
    require(!tol_delta || *tol_delta > 0.0, ErrorCode::InvalidConfig, "tol_delta must be positive");
    require(tol_t > 0.0, ErrorCode::InvalidConfig, "tol_t must be positive");
    require(clamp > 0.0, ErrorCode::InvalidConfig, "clamp must be positive");
    require(bracket_init > 0.0 && bracket_init <= clamp, ErrorCode::InvalidConfig,
            "bracket_init must lie in (0, clamp]");
    require(max_iter >= 60, ErrorCode::InvalidConfig, "max_iter must be at least 60");
  }

  double resolved_tol(std::size_t n) const { return tol_delta.value_or(1e-10 * static_cast<double>(n)); }
};

// Counts one-sided endpoint programs; shared across fit workers.
struct SolverStats {
  std::atomic<std::size_t> root_finds{0};
};

// log softmax(z + c), evaluated with max-subtraction.
inline std::vector<double> log_softmax_shift(std::span<const double> z, std::span<const double> c) {
  require(z.size() == c.size(), ErrorCode::LengthMismatch, "logit and shift lengths differ");
  std::vector<double> v(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) v[j] = z[j] + c[j];
  const double lse = numeric::logsumexp(v);
  for (double& x : v) x -= lse;
  return v;
}

inline std::vector<double> softmax(std::span<const double> z) {
  const double lse = numeric::logsumexp(z);
  std::vector<double> p(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) p[j] = std::exp(z[j] - lse);
  return p;
}

// z_k - logsumexp_{j≠k} z_j, so that p_k(z + t·e_k) = σ(r + t).
inline double one_vs_rest_logit(std::span<const double> z, std::size_t k) {
  const double lse = numeric::logsumexp(z);
  const double log_pk = z[k] - lse;
  // log(1 - p_k): log1p is accurate while p_k < 1/2; otherwise sum the rest.
  double log_rest;
  if (log_pk < -std::log(2.0)) {
    log_rest = std::log1p(-std::exp(log_pk));
  } else {
    double m = -numeric::kInf;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (j != k) m = std::max(m, z[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (j != k) s += std::exp(z[j] - m);
    }
    log_rest = m + std::log(s) - lse;
  }
  return log_pk - log_rest;
}

// p_k(z + t·e_k); t may be ±inf.
inline double shifted_class_probability(std::span<const double> z, std::size_t k, double t) {
  if (t == -numeric::kInf) return 0.0;
  if (t == numeric::kInf) return 1.0;
  return numeric::sigmoid(one_vs_rest_logit(z, k) + t);
}

inline double delta_loglik(const LabeledLogits& data, std::span<const double> c) {
  require(c.size() == data.num_classes(), ErrorCode::LengthMismatch, "shift length differs from K");
  const auto& logits = data.logits();
  std::vector<double> shifted(c.size());
  numeric::CompensatedSum sum;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto z = logits.row(n);
    const std::size_t y = data.labels()[n];
    for (std::size_t j = 0; j < z.size(); ++j) shifted[j] = z[j] + c[j];
    // c_y - [lse(z + c) - lse(z)]
    sum.add(c[y] - (numeric::logsumexp(shifted) - numeric::logsumexp(z)));
  }
  return sum.value();
}

// ∇Δℓ(c) = Σ_n (e_{y_n} - p_n(c)); components sum to zero.
inline std::vector<double> delta_loglik_grad(const LabeledLogits& data, std::span<const double> c) {
  require(c.size() == data.num_classes(), ErrorCode::LengthMismatch, "shift length differs from K");
  const std::size_t kk = data.num_classes();
  std::vector<numeric::CompensatedSum> acc(kk);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto lp = log_softmax_shift(data.logits().row(n), c);
    for (std::size_t j = 0; j < kk; ++j) acc[j].add(-std::exp(lp[j]));
  }
  std::vector<double> g(kk);
  for (std::size_t j = 0; j < kk; ++j) g[j] = static_cast<double>(data.class_counts()[j]) + acc[j].value();
  return g;
}

// Δℓ restricted to the class-k axis, with the per-row one-vs-rest logits
// cached so that each evaluation is O(N).
class ClassAxis {
 public:
  ClassAxis(const LabeledLogits& data, std::size_t k)
      : k_(k), count_(data.class_counts()[k]), total_(data.size()), r_(data.size()), base_(data.size()) {
    require(k < data.num_classes(), ErrorCode::OutOfRange, "class index out of range");
    for (std::size_t n = 0; n < data.size(); ++n) {
      r_[n] = one_vs_rest_logit(data.logits().row(n), k);
      base_[n] = numeric::softplus(r_[n]);
    }
  }

  std::size_t class_index() const { return k_; }
  std::size_t count() const { return count_; }
  std::size_t total() const { return total_; }

  double value(double t) const {
    if (t == 0.0) return 0.0;
    numeric::CompensatedSum sum;
    sum.add(static_cast<double>(count_) * t);
    for (std::size_t n = 0; n < r_.size(); ++n) sum.add(-(numeric::softplus(r_[n] + t) - base_[n]));
    return sum.value();
  }

  // dΔℓ_k/dt = N_k - Σ_n p_k^{(n)}(t·e_k)
  double slope(double t) const {
    numeric::CompensatedSum sum;
    sum.add(static_cast<double>(count_));
    for (double r : r_) sum.add(-numeric::sigmoid(r + t));
    return sum.value();
  }

 private:
  std::size_t k_;
  std::size_t count_;
  std::size_t total_;
  std::vector<double> r_;
  std::vector<double> base_;
};

inline double delta_loglik_1d(const LabeledLogits& data, std::size_t k, double t) {
  return ClassAxis(data, k).value(t);
}

struct AxisMaximum {
  double t_star;
  double value;
};

namespace detail {

// Largest-|offset| search from `center` in direction dir (±1) for the point
// where f crosses `target`, given f(center) >= target. Returns ±inf when f
// stays feasible up to the clamp.
template <class F>
double solve_side(const F& f, double center, double target, int dir, const SolverConfig& cfg, double tol,
                  double& residual) {
  residual = 0.0;
  const double limit = dir > 0 ? cfg.clamp : -cfg.clamp;
  double feasible = center;
  double infeasible = 0.0;
  bool bracketed = false;
  for (double step = cfg.bracket_init;; step *= 2.0) {
    double t = center + dir * step;
    const bool at_clamp = dir > 0 ? t >= limit : t <= limit;
    if (at_clamp) t = limit;
    if (f(t) < target) {
      infeasible = t;
      bracketed = true;
      break;
    }
    feasible = t;
    if (at_clamp) break;
  }
  if (!bracketed) return dir > 0 ? numeric::kInf : -numeric::kInf;

  // Bisect keeping f(feasible) >= target > f(infeasible); the feasible side is
  // returned so that endpoints for larger α never poke outside smaller ones.
  double f_feasible = f(feasible);
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double width = std::abs(infeasible - feasible);
    residual = f_feasible - target;
    if (width <= cfg.tol_t * std::max(1.0, std::abs(feasible)) && residual <= tol) return feasible;
    const double mid = feasible + 0.5 * (infeasible - feasible);
    if (mid == feasible || mid == infeasible) {
      if (residual <= tol) return feasible;
      throw Error(ErrorCode::SolverBudgetExceeded,
                  "bracket exhausted at t = " + std::to_string(feasible) + " with residual " + std::to_string(residual));
    }
    const double fm = f(mid);
    if (fm >= target) {
      feasible = mid;
      f_feasible = fm;
    } else {
      infeasible = mid;
    }
  }
  throw Error(ErrorCode::SolverBudgetExceeded, "bisection did not reach tolerance within " +
                                                   std::to_string(cfg.max_iter) + " iterations");
}

}  // namespace detail

// Unique maximizer of Δℓ_k, found by bisection on its strictly decreasing
// derivative. Needs 0 < N_k < N for the maximum to be attained.
inline AxisMaximum family_max_1d(const ClassAxis& axis, const SolverConfig& cfg) {
  cfg.validate();
  require(axis.count() > 0 && axis.count() < axis.total(), ErrorCode::DegenerateClass,
          "class " + std::to_string(axis.class_index() + 1) + " has N_k = " + std::to_string(axis.count()) +
              " of N = " + std::to_string(axis.total()) + "; no interior maximum");
  const double tol = cfg.resolved_tol(axis.total());
  const double g0 = axis.slope(0.0);
  if (std::abs(g0) <= tol) return {0.0, 0.0};
  const int dir = g0 > 0.0 ? 1 : -1;
  // Bracket the sign change of the slope.
  double lo = 0.0;
  double hi = 0.0;
  for (double step = cfg.bracket_init;; step *= 2.0) {
    hi = dir * std::min(step, cfg.clamp);
    if (dir * axis.slope(hi) <= 0.0) break;
    lo = hi;
    require(std::abs(hi) < cfg.clamp, ErrorCode::SolverBudgetExceeded, "axis maximum lies beyond the clamp");
  }
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    const double g = axis.slope(mid);
    if (std::abs(g) <= tol || mid == lo || mid == hi) return {mid, axis.value(mid)};
    if (dir * g > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw Error(ErrorCode::SolverBudgetExceeded, "axis maximum did not converge");
}

inline AxisMaximum family_max_1d(const LabeledLogits& data, std::size_t k, const SolverConfig& cfg) {
  return family_max_1d(ClassAxis(data, k), cfg);
}

// Endpoints of {t : Δℓ_k(t) >= log α} (base) or of
// {t : Δℓ_k(t) - max Δℓ_k >= log α} (family-mle).
inline ShiftEndpoints solve_endpoints(const ClassAxis& axis, const AlphaLevel& alpha, BudgetMode mode,
                                      const SolverConfig& cfg, SolverStats* stats = nullptr) {
  cfg.validate();
  if (alpha.alpha() == 0.0) return {-numeric::kInf, numeric::kInf, 0.0, 0.0};
  if (stats) stats->root_finds += 2;

  const double tol = cfg.resolved_tol(axis.total());
  const auto f = [&axis](double t) { return axis.value(t); };

  double center = 0.0;
  double target = alpha.log_budget();
  if (mode == BudgetMode::FamilyMle) {
    const auto top = family_max_1d(axis, cfg);
    center = top.t_star;
    if (alpha.alpha() == 1.0) return {center, center, 0.0, 0.0};
    target = top.value + alpha.log_budget();
  }

  ShiftEndpoints e;
  // N_k = 0: Δℓ_k is decreasing, so it never drops below the budget for t < 0.
  // N_k = N: increasing, same on the positive side.
  if (mode == BudgetMode::Base && axis.count() == 0) {
    e.t_minus = -numeric::kInf;
  } else {
    e.t_minus = detail::solve_side(f, center, target, -1, cfg, tol, e.residual_minus);
  }
  if (mode == BudgetMode::Base && axis.count() == axis.total()) {
    e.t_plus = numeric::kInf;
  } else {
    e.t_plus = detail::solve_side(f, center, target, +1, cfg, tol, e.residual_plus);
  }
  return e;
}

inline ShiftEndpoints solve_endpoints(const LabeledLogits& data, std::size_t k, const AlphaLevel& alpha,
                                      BudgetMode mode, const SolverConfig& cfg) {
  return solve_endpoints(ClassAxis(data, k), alpha, mode, cfg);
}

struct FitOptions {
  std::size_t threads = 1;
  SolverStats* stats = nullptr;
};

// Solves both endpoint programs for every (α, class) pair.
inline DecalibrationModel fit(const LabeledLogits& data, std::span<const double> alphas, BudgetMode mode,
                              const SolverConfig& cfg, const FitOptions& opts = {}) {
  cfg.validate();
  require(data.classes_present() >= 2, ErrorCode::SingleClassData,
          "training labels contain only " + std::to_string(data.classes_present()) + " distinct class");
  require(!alphas.empty(), ErrorCode::EmptyList, "no alpha levels given");
  const std::size_t kk = data.num_classes();

  std::vector<AlphaLevel> levels;
  for (double a : alphas) levels.emplace_back(a);

  std::vector<std::optional<ClassAxis>> axes(kk);
  parallel_for(kk, opts.threads, [&](std::size_t k) { axes[k].emplace(data, k); });

  std::vector<ShiftEndpoints> solved(levels.size() * kk);
  parallel_for(solved.size(), opts.threads, [&](std::size_t task) {
    const std::size_t i = task / kk;
    const std::size_t k = task % kk;
    solved[task] = solve_endpoints(*axes[k], levels[i], mode, cfg, opts.stats);
  });

  std::vector<DecalibrationModel::Level> out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    out.push_back({levels[i], std::vector<ShiftEndpoints>(solved.begin() + static_cast<std::ptrdiff_t>(i * kk),
                                                          solved.begin() + static_cast<std::ptrdiff_t>((i + 1) * kk))});
  }
  return DecalibrationModel(kk, data.size(), mode, std::move(out), cfg.clamp, cfg.resolved_tol(data.size()));
}

struct MultivariateBound {
  double value;                // sup of p_k(x; c) over the budget set
  std::vector<double> shift;   // maximizing c, normalized to Σc = 0
  double grad_norm;            // projected gradient norm at the last barrier stage
};

namespace detail {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct LikelihoodState {
  double value;
  Vec grad;
  Mat hess;
};

inline LikelihoodState likelihood_state(const LabeledLogits& data, const Vec& c) {
  const std::size_t kk = data.num_classes();
  std::vector<double> cv(c.data(), c.data() + kk);
  LikelihoodState s{delta_loglik(data, cv), Vec::Zero(static_cast<Eigen::Index>(kk)),
                    Mat::Zero(static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(kk))};
  Vec p(static_cast<Eigen::Index>(kk));
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto lp = log_softmax_shift(data.logits().row(n), cv);
    for (std::size_t j = 0; j < kk; ++j) p[static_cast<Eigen::Index>(j)] = std::exp(lp[j]);
    s.grad -= p;
    s.grad[static_cast<Eigen::Index>(data.labels()[n])] += 1.0;
    s.hess.diagonal() -= p;
    s.hess.noalias() += p * p.transpose();
  }
  return s;
}

inline Vec project(const Vec& v) { return v.array() - v.mean(); }

// Newton direction restricted to Σd = 0 via the bordered KKT system.
inline Vec newton_direction(const Mat& hess, const Vec& grad) {
  const Eigen::Index k = grad.size();
  Mat kkt = Mat::Zero(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = hess;
  kkt.block(0, k, k, 1).setOnes();
  kkt.block(k, 0, 1, k).setOnes();
  Vec rhs = Vec::Zero(k + 1);
  rhs.head(k) = -grad;
  Vec sol = kkt.fullPivLu().solve(rhs);
  Vec d = project(sol.head(k));
  if (!d.allFinite() || d.dot(grad) <= 0.0) d = project(grad);
  return d;
}

// Joint maximizer of Δℓ on Σc = 0 by damped Newton.
inline Vec joint_mle(const LabeledLogits& data, int max_iter) {
  const auto kk = static_cast<Eigen::Index>(data.num_classes());
  Vec c = Vec::Zero(kk);
  auto st = likelihood_state(data, c);
  const double gtol = 1e-12 * static_cast<double>(data.size());
  for (int it = 0; it < max_iter; ++it) {
    const Vec pg = project(st.grad);
    if (pg.norm() <= gtol) return c;
    const Vec d = newton_direction(st.hess, st.grad);
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const Vec cand = c + step * d;
      auto cs = likelihood_state(data, cand);
      if (cs.value >= st.value + 1e-4 * step * pg.dot(d)) {
        c = cand;
        st = std::move(cs);
        moved = true;
        break;
      }
    }
    if (!moved) return c;
  }
  return c;
}

}  // namespace detail

// sup over {c : Δℓ(c) >= budget} of p_k(z + c), by a log-barrier interior
// method on the hyperplane Σc = 0 with damped Newton inner steps.
inline MultivariateBound upper_bound_multivariate(const LabeledLogits& data, std::span<const double> z, std::size_t k,
                                                  const AlphaLevel& alpha, BudgetMode mode, const SolverConfig& cfg) {
  using detail::Mat;
  using detail::Vec;
  require(alpha.alpha() > 0.0, ErrorCode::InvalidAlpha, "multivariate bound needs alpha > 0");
  require(data.classes_present() >= 2, ErrorCode::SingleClassData, "need at least two classes in the data");
  require(z.size() == data.num_classes(), ErrorCode::LengthMismatch, "test logit length differs from K");
  require(k < z.size(), ErrorCode::OutOfRange, "class index out of range");
  const auto kk = static_cast<Eigen::Index>(z.size());
  const Eigen::Index ki = static_cast<Eigen::Index>(k);

  auto test_state = [&](const Vec& c, Vec& q) {
    std::vector<double> cv(c.data(), c.data() + kk);
    const auto lq = log_softmax_shift(z, cv);
    for (Eigen::Index j = 0; j < kk; ++j) q[j] = std::exp(lq[static_cast<std::size_t>(j)]);
    return lq[k];
  };
  auto finish = [&](const Vec& c, double gnorm) {
    Vec q(kk);
    const double lp = test_state(c, q);
    return MultivariateBound{std::exp(lp), std::vector<double>(c.data(), c.data() + kk), gnorm};
  };

  constexpr int kInner = 500;
  Vec c = Vec::Zero(kk);
  double threshold = alpha.log_budget();
  if (mode == BudgetMode::FamilyMle) {
    require(data.classes_present() == data.num_classes(), ErrorCode::DegenerateClass,
            "family-mle budget needs every class present");
    c = detail::joint_mle(data, kInner);
    threshold += detail::likelihood_state(data, c).value;
    if (alpha.alpha() == 1.0) return finish(c, 0.0);
  } else if (alpha.alpha() == 1.0) {
    // The budget set {Δℓ >= 0} has an interior only if 0 is not already the
    // joint maximum.
    c = detail::joint_mle(data, kInner);
    if (detail::likelihood_state(data, c).value <= cfg.resolved_tol(data.size())) return finish(Vec::Zero(kk), 0.0);
  }

  const double mus[] = {1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10};
  double gnorm = 0.0;
  double last_decrement = 0.0;
  for (double mu : mus) {
    auto objective = [&](const Vec& cc, Vec* grad, Mat* hess) -> double {
      auto st = detail::likelihood_state(data, cc);
      const double slack = st.value - threshold;
      if (!(slack > 0.0)) return -numeric::kInf;
      Vec q(kk);
      const double lp = test_state(cc, q);
      if (grad) {
        *grad = -q;
        (*grad)[ki] += 1.0;
        *grad += (mu / slack) * st.grad;
      }
      if (hess) {
        *hess = -Mat(q.asDiagonal()) + q * q.transpose();
        *hess += (mu / slack) * st.hess - (mu / (slack * slack)) * st.grad * st.grad.transpose();
      }
      return lp + mu * std::log(slack);
    };
    Vec g(kk);
    Mat h(kk, kk);
    double val = objective(c, &g, &h);
    for (int it = 0; it < kInner; ++it) {
      const Vec pg = detail::project(g);
      gnorm = pg.norm();
      const Vec d = detail::newton_direction(h, g);
      const double decrement = g.dot(d);
      if (gnorm <= 1e-12 || decrement <= 1e-16) break;
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, step *= 0.5) {
        const Vec cand = c + step * d;
        const double cv = objective(cand, nullptr, nullptr);
        if (cv >= val + 1e-4 * step * decrement) {
          c = cand;
          val = objective(c, &g, &h);
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    gnorm = detail::project(g).norm();
    last_decrement = std::max(0.0, g.dot(detail::newton_direction(h, g)));
  }
  // Near the boundary the barrier gradient is a difference of large terms, so
  // a small Newton decrement (the predicted remaining gain) also counts.
  require(gnorm <= 1e-6 || last_decrement <= 1e-12, ErrorCode::NotConverged,
          "barrier iterations stopped with projected gradient norm " + std::to_string(gnorm));
  return finish(c, gnorm);
}

}  // namespace credal
