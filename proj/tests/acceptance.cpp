// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances and sizes are fixed here, not tuned per run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "credal/credal.hpp"
#include "oracles.hpp"

using namespace credal;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<oracle::Row> rows_of(const LogitMatrix& m) {
  std::vector<oracle::Row> out;
  for (std::size_t n = 0; n < m.rows(); ++n) out.emplace_back(m.row(n).begin(), m.row(n).end());
  return out;
}

std::vector<std::size_t> labels_of(const LabeledLogits& d) { return {d.labels().begin(), d.labels().end()}; }

// Miscalibrated synthetic task shared by the Pareto and OOD criteria.
SynthConfig pareto_config(std::uint64_t seed) {
  SynthConfig c;
  c.num_classes = 3;
  c.dim = 2;
  c.n_train = 50;
  c.n_test = 2000;
  c.n_ood = 2000;
  c.separation = 4.0;
  c.miscal_bias = {1.0, -1.0, 0.0};
  c.miscal_noise = 0.3;
  c.seed = seed;
  return c;
}

SynthConfig certification_config() {
  SynthConfig c;
  c.num_classes = 5;
  c.dim = 8;
  c.n_train = 2000;
  c.n_test = 500;
  c.n_ood = 1;
  c.separation = 2.0;
  c.miscal_bias = {1.0, -1.0, 0.0, 0.0, 0.0};
  c.miscal_noise = 0.3;
  c.seed = 7;
  return c;
}

const std::vector<double> kCertAlphas{0.2, 0.4, 0.6, 0.8, 0.9, 0.95};

BoxCredalSet lattice_box(std::mt19937_64& rng, std::size_t k) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> p(k);
  double s = 0;
  for (auto& v : p) s += (v = ex(rng));
  std::uniform_int_distribution<int> w(0, 60);
  std::vector<ProbabilityInterval> iv;
  for (double v : p) {
    const int lo = std::max(0, static_cast<int>(std::floor(v / s * 200)) - w(rng));
    const int hi = std::min(200, static_cast<int>(std::ceil(v / s * 200)) + w(rng));
    iv.emplace_back(lo / 200.0, hi / 200.0);
  }
  return tighten_reachable(BoxCredalSet(std::move(iv)));
}

Outcome ac1_certification() {
  const auto data = generate(certification_config()).train;
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = fit(data, kCertAlphas, BudgetMode::Base, SolverConfig{}, FitOptions{1, nullptr});
  const double secs = seconds_since(t0);
  const auto rows = rows_of(data.logits());
  const auto labels = labels_of(data);
  const double limit = 1e-8 * static_cast<double>(data.size());
  double worst = 0;
  std::size_t finite = 0;
  for (double a : kCertAlphas) {
    for (std::size_t k = 0; k < data.num_classes(); ++k) {
      const auto& e = model.endpoints(a, k);
      for (double t : {e.t_minus, e.t_plus}) {
        if (!std::isfinite(t)) continue;
        ++finite;
        worst = std::max(worst, std::fabs(static_cast<double>(oracle::delta_loglik_axis(rows, labels, k, t)) -
                                          std::log(a)));
      }
    }
  }
  return {worst <= limit && secs < 5.0 && finite > 0,
          std::to_string(finite) + " finite endpoints, max |dl - ln a| = " + fmt("%.3g", worst) + " (limit " +
              fmt("%.3g", limit) + "), fit " + fmt("%.3f", secs) + " s (limit 5 s)"};
}

Outcome ac2_nestedness() {
  const auto s = generate(certification_config());
  const auto model = fit(s.train, kCertAlphas, BudgetMode::Base, SolverConfig{});
  std::size_t checks = 0, fails = 0;
  for (std::size_t n = 0; n < s.test_logits.rows(); ++n) {
    std::vector<BoxCredalSet> boxes;
    for (double a : kCertAlphas) boxes.push_back(predict_box(model, s.test_logits.row(n), a));
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        ++checks;
        if (!is_nested(boxes[i], boxes[j])) ++fails;
      }
    }
  }
  return {fails == 0, std::to_string(checks - fails) + "/" + std::to_string(checks) + " nested pairs over " +
                          std::to_string(s.test_logits.rows()) + " instances"};
}

Outcome ac3_mle_containment() {
  const auto s = generate(certification_config());
  std::vector<double> alphas = kCertAlphas;
  alphas.insert(alphas.end(), {0.01, 0.5, 1.0});
  const auto model = fit(s.train, alphas, BudgetMode::Base, SolverConfig{});
  std::size_t checks = 0, fails = 0;
  for (std::size_t n = 0; n < s.test_logits.rows(); ++n) {
    const auto mle = validate_probability_vector(softmax(s.test_logits.row(n)));
    for (double a : alphas) {
      ++checks;
      if (!contains(predict_box(model, s.test_logits.row(n), a), mle)) ++fails;
    }
  }
  return {fails == 0, std::to_string(checks - fails) + "/" + std::to_string(checks) + " boxes contain softmax(z)"};
}

Outcome ac4_alpha_zero() {
  const auto s = generate(certification_config());
  bool interior = true;
  for (auto c : s.train.class_counts()) interior = interior && c > 0 && c < s.train.size();
  const std::vector<double> zero{0.0};
  const auto model = fit(s.train, zero, BudgetMode::Base, SolverConfig{});
  const auto boxes = predict_boxes(model, s.test_logits, 0.0);
  bool all_full = true;
  for (const auto& b : boxes) all_full = all_full && b == BoxCredalSet::full(b.size());
  const double cov = coverage(boxes, s.test_gts);
  const double eff = efficiency(boxes);
  return {interior && all_full && cov == 1.0 && eff == 0.0,
          std::string(all_full ? "all" : "not all") + " boxes [0,1]^K, coverage " + fmt("%.17g", cov) +
              ", efficiency " + fmt("%.17g", eff)};
}

Outcome ac5_gradient_concavity() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 1.5);
  std::uniform_int_distribution<int> kdist(2, 6), ndist(5, 80);
  double worst_grad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = static_cast<std::size_t>(kdist(rng));
    const std::size_t n = static_cast<std::size_t>(ndist(rng));
    std::uniform_int_distribution<std::size_t> lab(0, k - 1);
    std::vector<double> flat(n * k);
    for (auto& v : flat) v = 2 * nd(rng);
    std::vector<std::size_t> y(n);
    for (auto& v : y) v = lab(rng);
    const LabeledLogits data(LogitMatrix(n, k, flat), y);
    std::vector<double> c(k);
    for (auto& v : c) v = nd(rng);
    const auto rows = rows_of(data.logits());
    const auto g = delta_loglik_grad(data, c);
    const auto fd = oracle::central_difference(
        [&](const oracle::Row& cc) { return oracle::delta_loglik(rows, y, cc); }, c, 1e-5);
    for (std::size_t i = 0; i < k; ++i) {
      worst_grad = std::max(worst_grad, std::fabs(g[i] - fd[i]) / std::max(1.0, std::fabs(g[i])));
    }
  }

  double worst_violation = 0;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = static_cast<std::size_t>(kdist(rng));
    const std::size_t n = 20;
    std::uniform_int_distribution<std::size_t> lab(0, k - 1);
    std::vector<double> flat(n * k);
    for (auto& v : flat) v = 2 * nd(rng);
    std::vector<std::size_t> y(n);
    for (auto& v : y) v = lab(rng);
    const LabeledLogits data(LogitMatrix(n, k, flat), y);
    std::vector<double> c1(k), c2(k), mid(k);
    const double lam = ud(rng);
    for (std::size_t i = 0; i < k; ++i) {
      c1[i] = 3 * nd(rng);
      c2[i] = 3 * nd(rng);
      mid[i] = lam * c1[i] + (1 - lam) * c2[i];
    }
    const double gap = lam * delta_loglik(data, c1) + (1 - lam) * delta_loglik(data, c2) - delta_loglik(data, mid);
    worst_violation = std::max(worst_violation, gap);
  }
  return {worst_grad <= 1e-6 && worst_violation <= 1e-9,
          "max gradient rel. error " + fmt("%.3g", worst_grad) + " (limit 1e-6), max concavity violation " +
              fmt("%.3g", worst_violation) + " (limit 1e-9)"};
}

Outcome ac6_monotonicity() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::size_t fails = 0, checks = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t kk = 2 + static_cast<std::size_t>(inst % 6);
    std::vector<double> z(kk);
    for (auto& v : z) v = nd(rng);
    const std::size_t k = static_cast<std::size_t>(inst) % kk;
    std::vector<double> prev;
    for (int i = 0; i < 100; ++i) {
      const double t = -8.0 + 16.0 * i / 99.0;
      std::vector<double> c(kk, 0.0);
      c[k] = t;
      const auto lp = log_softmax_shift(z, c);
      std::vector<double> p(kk);
      for (std::size_t j = 0; j < kk; ++j) p[j] = std::exp(lp[j]);
      p[k] = shifted_class_probability(z, k, t);
      if (!prev.empty()) {
        for (std::size_t j = 0; j < kk; ++j) {
          ++checks;
          const bool ok = j == k ? p[j] > prev[j] : p[j] < prev[j];
          if (!ok) ++fails;
        }
      }
      prev = p;
    }
  }
  return {fails == 0, std::to_string(checks - fails) + "/" + std::to_string(checks) +
                          " strict steps (p_k up, p_j down) over 100 instances x 100-point grid"};
}

Outcome ac7_entropy_oracles() {
  std::mt19937_64 rng(7);
  double worst_max = 0, worst_min = -1e9, worst_zo = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto box = lattice_box(rng, 3);
    oracle::Bounds b;
    for (std::size_t k = 0; k < 3; ++k) {
      b.lower.push_back(box[k].lower());
      b.upper.push_back(box[k].upper());
    }
    const auto g = oracle::grid_extrema3(b, 200);
    worst_max = std::max(worst_max, std::fabs(max_entropy(box).value - g.max_entropy));
    worst_min = std::max(worst_min, min_entropy(box).value - g.min_entropy);
    worst_zo = std::max(worst_zo, std::fabs(zero_one_eu(box) - g.zero_one));
  }
  std::size_t greedy_below = 0;
  for (std::size_t k = 2; k <= 8; ++k) {
    for (int trial = 0; trial < 200; ++trial) {
      const auto box = lattice_box(rng, k);
      const double gap = min_entropy_exact(box).value - min_entropy_greedy(box).value;
      if (gap > 0) ++greedy_below;
    }
  }
  return {worst_max <= 5e-4 && worst_min <= 5e-4 && worst_zo <= 1e-2 && greedy_below == 0,
          "K=3: max |H_max - grid| " + fmt("%.3g", worst_max) + ", max (H_min - grid min) " + fmt("%.3g", worst_min) +
              ", max |EU01 - grid| " + fmt("%.3g", worst_zo) + "; K=2..8: greedy below exact in " +
              std::to_string(greedy_below) + "/1400 boxes"};
}

Outcome ac8_multivariate() {
  SynthConfig sc = certification_config();
  sc.n_train = 400;
  sc.n_test = 50;
  sc.seed = 8;
  const auto s = generate(sc);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> kd(0, sc.num_classes - 1);
  const std::vector<double> alphas{0.1, 0.3, 0.5, 0.7, 0.9};
  std::uniform_int_distribution<std::size_t> ad(0, alphas.size() - 1);
  double worst_dom = -1e9;
  for (std::size_t i = 0; i < 50; ++i) {
    const std::size_t k = kd(rng);
    const double a = alphas[ad(rng)];
    const auto z = s.test_logits.row(i);
    const auto e = solve_endpoints(s.train, k, AlphaLevel(a), BudgetMode::Base, SolverConfig{});
    const double one_d = shifted_class_probability(z, k, e.t_plus);
    const auto mv = upper_bound_multivariate(s.train, z, k, AlphaLevel(a), BudgetMode::Base, SolverConfig{});
    worst_dom = std::max(worst_dom, one_d - mv.value);
  }

  double worst_grid = 0;
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int toy = 0; toy < 4; ++toy) {
    std::vector<oracle::Row> rows(10, oracle::Row(3));
    std::vector<double> flat;
    std::vector<std::size_t> y(10);
    for (std::size_t n = 0; n < 10; ++n) {
      for (auto& v : rows[n]) flat.push_back(v = nd(rng));
      y[n] = n % 3;
    }
    const LabeledLogits data(LogitMatrix(10, 3, flat), y);
    const oracle::Row x{nd(rng), nd(rng), nd(rng)};
    const double a = 0.2 + 0.2 * toy;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto mv = upper_bound_multivariate(data, x, k, AlphaLevel(a), BudgetMode::Base, SolverConfig{});
      worst_grid = std::max(worst_grid, std::fabs(mv.value - oracle::hyperplane_grid_max3(rows, y, x, k, a, 5.0)));
    }
  }
  return {worst_dom <= 1e-6 && worst_grid <= 1e-3,
          "max (1-d bound - multivariate) " + fmt("%.3g", worst_dom) + " (limit 1e-6), max |multivariate - grid| " +
              fmt("%.3g", worst_grid) + " (limit 1e-3)"};
}

Outcome ac9_pareto() {
  const std::vector<double> alphas{0.01, 0.2, 0.5, 0.8, 0.95};
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto s = generate(pareto_config(seed));
    const auto model = fit(s.train, alphas, BudgetMode::Base, SolverConfig{});
    const auto sum = pareto_sweep(model, s.test_logits, &s.test_gts, nullptr);
    bool mono = true;
    for (std::size_t i = 1; i < sum.rows.size(); ++i) {
      mono = mono && *sum.rows[i].coverage <= *sum.rows[i - 1].coverage &&
             sum.rows[i].efficiency >= sum.rows[i - 1].efficiency;
    }
    const double cov = *sum.rows.front().coverage;
    const double eff = sum.rows.back().efficiency;
    ok = ok && mono && cov >= 0.95 && eff >= 0.9;
    detail += (seed > 1 ? "; " : "") + std::string("seed ") + std::to_string(seed) + ": " +
              (mono ? "monotone" : "NOT monotone") + ", cov(0.01) " + fmt("%.4f", cov) + ", eff(0.95) " +
              fmt("%.4f", eff);
  }
  return {ok, detail};
}

Outcome ac10_ood() {
  const auto s = generate(pareto_config(1));
  const std::vector<double> alphas{0.6, 0.95};
  const auto model = fit(s.train, alphas, BudgetMode::Base, SolverConfig{});
  const auto sum = pareto_sweep(model, s.test_logits, nullptr, &s.ood_logits);
  const double lo = *sum.rows[0].auroc;
  const double hi = *sum.rows[1].auroc;
  return {hi > lo, "seed 1, 2000 ID + 2000 OOD: AUROC(0.6) " + fmt("%.4f", lo) + ", AUROC(0.95) " + fmt("%.4f", hi) +
                       " (non-binding target >= 0.75: " + (hi >= 0.75 ? "met" : "not met") + ")"};
}

Outcome ac11_pipeline() {
  const auto t0 = std::chrono::steady_clock::now();
  SynthConfig sc;
  sc.num_classes = 10;
  sc.dim = 9;
  sc.n_train = 10000;
  sc.n_test = 2000;
  sc.n_ood = 1;
  sc.separation = 3.0;
  sc.seed = 11;
  const auto s = generate(sc);
  const std::vector<double> alphas{0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.95};
  SolverStats stats;
  const auto model = fit(s.train, alphas, BudgetMode::Base, SolverConfig{}, FitOptions{1, &stats});
  double min_cov = 1.0;
  for (double a : alphas) {
    const auto boxes = predict_boxes(model, s.test_logits, a, 1);
    min_cov = std::min(min_cov, coverage(boxes, s.test_gts));
    (void)efficiency(boxes);
  }
  const double secs = seconds_since(t0);
  const std::size_t finds = stats.root_finds;
  return {secs < 30.0 && finds == 140, "synth+fit+predict+metrics " + fmt("%.2f", secs) + " s (limit 30 s), " +
                                           std::to_string(finds) + " root-finds (expected 140)"};
}

Outcome ac12_golden() {
  const std::string dir = CREDAL_GOLDEN_DIR;
  const auto text = io::read_text(dir + "/model.json");
  const bool model_bytes = io::model_to_json(io::model_from_json(text)) == text;

  // Fitted model: every double survives the document bit for bit.
  const auto s = generate(certification_config());
  const auto m = fit(s.train, kCertAlphas, BudgetMode::Base, SolverConfig{});
  const auto back = io::model_from_json(io::model_to_json(m));
  bool bits = back.num_classes() == m.num_classes() && back.num_train() == m.num_train() &&
              [&] {
                const double a = m.tol(), b = back.tol();
                return std::memcmp(&a, &b, sizeof a) == 0;
              }();
  for (double a : kCertAlphas) {
    for (std::size_t k = 0; k < m.num_classes(); ++k) {
      const auto& x = m.endpoints(a, k);
      const auto& y = back.endpoints(a, k);
      for (auto [u, v] : {std::pair{x.t_minus, y.t_minus}, std::pair{x.t_plus, y.t_plus},
                          std::pair{x.residual_minus, y.residual_minus}, std::pair{x.residual_plus, y.residual_plus}}) {
        bits = bits && std::memcmp(&u, &v, sizeof(double)) == 0;
      }
    }
  }

  const std::vector<double> mle{0.55, 0.25, 0.15, 0.05, 0.0};
  const SpiderPlotSpec spec{{"cat", "dog", "bird", "fish", "A&B"},
                            BoxCredalSet({ProbabilityInterval(0.4, 0.7), ProbabilityInterval(0.15, 0.35),
                                          ProbabilityInterval(0.05, 0.3), ProbabilityInterval(0.0, 0.1),
                                          ProbabilityInterval(0.0, 0.02)}),
                            validate_probability_vector(mle),
                            validate_probability_vector({0.6, 0.2, 0.2, 0.0, 0.0}),
                            1.0,
                            480};
  const bool svg = render_spider_svg(spec) == io::read_text(dir + "/spider.svg");
  return {model_bytes && bits && svg, std::string("golden model JSON ") + (model_bytes ? "identical" : "DIFFERS") +
                                          ", fitted model round-trip " + (bits ? "bit-exact" : "NOT bit-exact") +
                                          ", spider SVG " + (svg ? "identical" : "DIFFERS")};
}

}  // namespace

// Optional arguments pick criteria by number; no arguments runs all of them.
int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"endpoint certification", ac1_certification}, {"nestedness", ac2_nestedness},
      {"MLE containment", ac3_mle_containment},       {"alpha=0 limit", ac4_alpha_zero},
      {"gradient/concavity", ac5_gradient_concavity}, {"monotonicity", ac6_monotonicity},
      {"entropy oracles", ac7_entropy_oracles},       {"multivariate dominance", ac8_multivariate},
      {"Pareto analog", ac9_pareto},                  {"OOD analog", ac10_ood},
      {"pipeline cost", ac11_pipeline},               {"golden files", ac12_golden},
  };
  std::vector<std::size_t> picked;
  for (int a = 1; a < argc; ++a) picked.push_back(std::stoul(argv[a]) - 1);
  if (picked.empty()) {
    for (std::size_t i = 0; i < criteria.size(); ++i) picked.push_back(i);
  }
  int failed = 0;
  for (std::size_t i : picked) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("AC%-2zu %s  %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, picked.size());
  return failed == 0 ? 0 : 1;
}
