#pragma once

// Synthetic classification tasks with an exact Bayes posterior.
//
// Features come from K isotropic unit-variance Gaussians whose means sit on a
// regular simplex with pairwise distance `separation`, equal priors. The true
// conditional p*(.|x) is then a softmax of μ_k·x. Training labels are drawn
// from p*(.|x); the "model" under study reports log p*(.|x) plus a fixed
// per-class bias and per-logit Gaussian noise.
//
// Randomness uses CounterRng (below) so output is reproducible bit for bit
// across platforms; std:: distributions are not specified exactly enough.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "credal/error.hpp"
#include "credal/likelihood.hpp"
#include "credal/numeric.hpp"
#include "credal/types.hpp"

namespace credal {

// Counter-based generator: output i of stream s under seed is
// mix(key(seed, s) + i·γ) with the SplitMix64 finalizer as mix and
// γ = 0x9E3779B97F4A7C15. Uniforms take the top 53 bits; normals use
// Box-Muller on (1 - u1, u2) and return the cosine branch only.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + kStreamSalt))) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() { return mix(key_ + (++counter_) * kGolden); }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kStreamSalt = 0x632BE59BD9B4E019ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct SynthConfig {
  std::size_t num_classes = 3;
  std::size_t n_train = 1000;
  std::size_t n_test = 500;
  std::size_t n_ood = 500;
  std::size_t dim = 2;
  double separation = 2.0;
  std::vector<double> miscal_bias;  // empty means all zeros
  double miscal_noise = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    require(num_classes >= 2, ErrorCode::InvalidConfig, "K must be at least 2");
    require(n_train >= 1 && n_test >= 1 && n_ood >= 1, ErrorCode::InvalidConfig, "instance counts must be >= 1");
    require(dim + 1 >= num_classes, ErrorCode::InvalidConfig,
            "dimension " + std::to_string(dim) + " cannot hold a regular simplex of " + std::to_string(num_classes) +
                " class means (need d >= K - 1)");
    require(std::isfinite(separation) && separation > 0.0, ErrorCode::InvalidConfig, "separation must be > 0");
    require(miscal_bias.empty() || miscal_bias.size() == num_classes, ErrorCode::InvalidConfig,
            "miscal_bias must have K entries");
    for (double b : miscal_bias) require(std::isfinite(b), ErrorCode::InvalidConfig, "miscal_bias not finite");
    require(std::isfinite(miscal_noise) && miscal_noise >= 0.0, ErrorCode::InvalidConfig,
            "miscal_noise must be >= 0");
  }
};

struct SynthData {
  LabeledLogits train;
  LogitMatrix test_logits;
  std::vector<ProbabilityVector> test_gts;
  LogitMatrix ood_logits;
};

// Class means in R^d: the centered scaled basis e_k - 1/K expressed in a
// Helmert basis of {Σ = 0}, padded with zeros. Pairwise distances equal
// `separation`.
inline std::vector<std::vector<double>> simplex_means(std::size_t num_classes, std::size_t dim, double separation) {
  const double scale = separation / std::sqrt(2.0);
  std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim, 0.0));
  for (std::size_t k = 0; k < num_classes; ++k) {
    for (std::size_t m = 1; m < num_classes; ++m) {
      // h_m = (1,...,1 [m times], -m, 0, ...) / sqrt(m(m+1))
      const double norm = std::sqrt(static_cast<double>(m * (m + 1)));
      double coord;
      if (k < m) {
        coord = 1.0 / norm;
      } else if (k == m) {
        coord = -static_cast<double>(m) / norm;
      } else {
        coord = 0.0;
      }
      means[k][m - 1] = scale * coord;  // the -1/K centering is orthogonal to every h_m
    }
  }
  return means;
}

namespace detail {

struct SynthSampler {
  const SynthConfig& cfg;
  std::vector<std::vector<double>> means;
  std::vector<double> bias;

  explicit SynthSampler(const SynthConfig& c)
      : cfg(c), means(simplex_means(c.num_classes, c.dim, c.separation)), bias(c.miscal_bias) {
    if (bias.empty()) bias.assign(c.num_classes, 0.0);
  }

  std::vector<double> draw_features(CounterRng& rng, const std::vector<double>* offset) const {
    const auto cls = static_cast<std::size_t>(rng.uniform() * static_cast<double>(cfg.num_classes));
    std::vector<double> x(cfg.dim);
    for (std::size_t i = 0; i < cfg.dim; ++i) {
      x[i] = means[cls][i] + rng.normal();
      if (offset) x[i] += (*offset)[i];
    }
    return x;
  }

  std::vector<double> true_log_posterior(const std::vector<double>& x) const {
    std::vector<double> logit(cfg.num_classes);
    for (std::size_t k = 0; k < cfg.num_classes; ++k) {
      double dot = 0.0;
      double sq = 0.0;
      for (std::size_t i = 0; i < cfg.dim; ++i) {
        dot += means[k][i] * x[i];
        sq += means[k][i] * means[k][i];
      }
      logit[k] = dot - 0.5 * sq;
    }
    const double lse = numeric::logsumexp(logit);
    for (double& v : logit) v -= lse;
    return logit;
  }

  void append_model_logits(const std::vector<double>& log_post, CounterRng& noise, std::vector<double>& out) const {
    for (std::size_t k = 0; k < cfg.num_classes; ++k) {
      double v = log_post[k] + bias[k];
      if (cfg.miscal_noise > 0.0) v += cfg.miscal_noise * noise.normal();
      out.push_back(v);
    }
  }
};

}  // namespace detail

inline SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  const detail::SynthSampler sampler(cfg);
  const std::size_t kk = cfg.num_classes;

  enum : std::uint64_t { kTrain = 1, kLabels, kTest, kOod, kNoise, kDirection };
  CounterRng train_rng(cfg.seed, kTrain);
  CounterRng label_rng(cfg.seed, kLabels);
  CounterRng test_rng(cfg.seed, kTest);
  CounterRng ood_rng(cfg.seed, kOod);
  CounterRng noise_rng(cfg.seed, kNoise);
  CounterRng dir_rng(cfg.seed, kDirection);

  std::vector<double> train_logits;
  std::vector<std::size_t> labels;
  train_logits.reserve(cfg.n_train * kk);
  labels.reserve(cfg.n_train);
  for (std::size_t n = 0; n < cfg.n_train; ++n) {
    const auto x = sampler.draw_features(train_rng, nullptr);
    const auto lp = sampler.true_log_posterior(x);
    // Inverse-CDF draw of the label from p*(.|x).
    const double u = label_rng.uniform();
    double cdf = 0.0;
    std::size_t y = kk - 1;
    for (std::size_t k = 0; k < kk; ++k) {
      cdf += std::exp(lp[k]);
      if (u < cdf) {
        y = k;
        break;
      }
    }
    labels.push_back(y);
    sampler.append_model_logits(lp, noise_rng, train_logits);
  }

  std::vector<double> test_logits;
  std::vector<ProbabilityVector> gts;
  test_logits.reserve(cfg.n_test * kk);
  gts.reserve(cfg.n_test);
  for (std::size_t n = 0; n < cfg.n_test; ++n) {
    const auto x = sampler.draw_features(test_rng, nullptr);
    const auto lp = sampler.true_log_posterior(x);
    std::vector<double> p(kk);
    for (std::size_t k = 0; k < kk; ++k) p[k] = std::exp(lp[k]);
    gts.push_back(validate_probability_vector(std::move(p)));
    sampler.append_model_logits(lp, noise_rng, test_logits);
  }

  // One random unit direction shared by the whole OOD set.
  std::vector<double> shift(cfg.dim);
  double norm = 0.0;
  for (double& v : shift) {
    v = dir_rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : shift) v *= 3.0 * cfg.separation / norm;

  std::vector<double> ood_logits;
  ood_logits.reserve(cfg.n_ood * kk);
  for (std::size_t n = 0; n < cfg.n_ood; ++n) {
    const auto x = sampler.draw_features(ood_rng, &shift);
    sampler.append_model_logits(sampler.true_log_posterior(x), noise_rng, ood_logits);
  }

  return SynthData{LabeledLogits(LogitMatrix(cfg.n_train, kk, std::move(train_logits)), std::move(labels)),
                   LogitMatrix(cfg.n_test, kk, std::move(test_logits)), std::move(gts),
                   LogitMatrix(cfg.n_ood, kk, std::move(ood_logits))};
}

}  // namespace credal
