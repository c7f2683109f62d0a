#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "credal/credal.hpp"

namespace credal::cli {
namespace {

std::size_t worker_count() {
  const char* env = std::getenv("CREDAL_DECAL_THREADS");
  if (env == nullptr || *env == '\0') return std::max(1u, std::thread::hardware_concurrency());
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  require(end != env && *end == '\0' && v >= 1, ErrorCode::InvalidConfig,
          std::string("CREDAL_DECAL_THREADS must be a positive integer, got '") + env + "'");
  return static_cast<std::size_t>(v);
}

std::vector<double> parse_alpha_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(io::detail::parse_number(io::detail::split_fields(item).front(), "--alphas"));
  }
  require(!out.empty(), ErrorCode::InvalidAlpha, "--alphas is empty");
  return out;
}

std::string json_number(std::optional<double> v) { return v ? io::format_double(*v) : ""; }

void write_json(const std::string& path, const nlohmann::ordered_json& doc) { io::write_text(path, doc.dump(2) + "\n"); }

std::vector<BoxCredalSet> tightened(const std::vector<BoxCredalSet>& boxes) {
  std::vector<BoxCredalSet> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) out.push_back(tighten_reachable(b));
  return out;
}

// Row numbers on the command line are 1-based like the CSV labels.
std::size_t row_index(std::size_t row, std::size_t n, const std::string& what) {
  require(row >= 1 && row <= n, ErrorCode::OutOfRange,
          "--row " + std::to_string(row) + " outside 1.." + std::to_string(n) + " of " + what);
  return row - 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Credal sets from relative-likelihood decalibration of classifier logits", "credal-decal"};
  app.require_subcommand(1);
  std::function<void()> action;

  // fit
  std::string train_path, alphas_arg, mode_arg = "base", model_out;
  std::optional<double> tol_arg;
  double clamp_arg = SolverConfig{}.clamp;
  auto* fit_cmd = app.add_subcommand("fit", "Fit per-class shift endpoints on labeled logits");
  fit_cmd->add_option("--train", train_path, "CSV z_1..z_K,y")->required();
  fit_cmd->add_option("--alphas", alphas_arg, "Comma-separated alpha grid")->required();
  fit_cmd->add_option("--mode", mode_arg, "Budget: base or family-mle");
  fit_cmd->add_option("--tol", tol_arg, "Residual tolerance on the log-likelihood (default 1e-10 N)");
  fit_cmd->add_option("--clamp", clamp_arg, "Largest finite |t| before an endpoint is reported infinite");
  fit_cmd->add_option("-o,--output", model_out, "Model JSON")->required();
  fit_cmd->callback([&] {
    action = [&] {
      const auto data = io::read_labeled_logits(train_path);
      SolverConfig cfg;
      cfg.tol_delta = tol_arg;
      cfg.clamp = clamp_arg;
      const auto model = fit(data, parse_alpha_list(alphas_arg), parse_budget_mode(mode_arg), cfg,
                             FitOptions{worker_count(), nullptr});
      io::write_model(model, model_out);
    };
  });

  // predict
  std::string model_path, test_path, boxes_out;
  double alpha = 0.0;
  auto* predict_cmd = app.add_subcommand("predict", "Predict box credal sets at one alpha");
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--test", test_path, "CSV z_1..z_K (a y column is ignored)")->required();
  predict_cmd->add_option("--alpha", alpha)->required();
  predict_cmd->add_option("-o,--output", boxes_out, "Boxes CSV l_1,u_1,...")->required();
  predict_cmd->callback([&] {
    action = [&] {
      const auto model = io::read_model(model_path);
      const auto boxes = predict_boxes(model, io::read_logits(test_path), alpha, worker_count());
      io::write_text(boxes_out, io::format_boxes_csv(boxes));
    };
  });

  // uncertainty
  std::string measure_arg = "entropy", unc_out;
  bool bits = false;
  auto* unc_cmd = app.add_subcommand("uncertainty", "Per-instance aleatoric/epistemic/total uncertainty");
  unc_cmd->add_option("--model", model_path)->required();
  unc_cmd->add_option("--test", test_path)->required();
  unc_cmd->add_option("--alpha", alpha)->required();
  unc_cmd->add_option("--measure", measure_arg, "entropy or zero-one");
  unc_cmd->add_flag("--bits", bits, "Report entropies in bits instead of nats");
  unc_cmd->add_option("-o,--output", unc_out)->required();
  unc_cmd->callback([&] {
    action = [&] {
      const auto measure = parse_eu_measure(measure_arg);
      const auto model = io::read_model(model_path);
      const auto boxes = predict_boxes(model, io::read_logits(test_path), alpha, worker_count());
      std::vector<std::optional<UncertaintyReport>> reports(boxes.size());
      parallel_for(boxes.size(), worker_count(), [&](std::size_t i) { reports[i].emplace(uncertainty_report(boxes[i])); });
      const double unit = bits ? std::log(2.0) : 1.0;
      std::string csv = measure == EuMeasure::Entropy ? "au,eu,tu\n" : "eu_zero_one\n";
      for (const auto& r : reports) {
        if (measure == EuMeasure::Entropy) {
          csv += io::format_double(r->au() / unit) + "," + io::format_double(r->eu_entropy() / unit) + "," +
                 io::format_double(r->tu() / unit) + "\n";
        } else {
          csv += io::format_double(r->eu_zero_one()) + "\n";
        }
      }
      io::write_text(unc_out, csv);
    };
  });

  // metrics
  std::string boxes_path, gt_path, summary_out;
  bool tightened_eff = false, renormalize = false;
  auto* metrics_cmd = app.add_subcommand("metrics", "Coverage and efficiency of predicted boxes");
  metrics_cmd->add_option("--boxes", boxes_path)->required();
  metrics_cmd->add_option("--gt", gt_path, "CSV p_1..p_K ground-truth distributions");
  metrics_cmd->add_flag("--renormalize", renormalize, "Divide ground-truth rows by their sum before validation");
  metrics_cmd->add_flag("--tightened", tightened_eff, "Efficiency on reachable (tightened) intervals");
  metrics_cmd->add_option("-o,--output", summary_out)->required();
  metrics_cmd->callback([&] {
    action = [&] {
      const auto boxes = io::read_boxes(boxes_path);
      nlohmann::ordered_json doc;
      doc["n_instances"] = boxes.size();
      if (!gt_path.empty()) doc["coverage"] = coverage(boxes, io::read_distributions(gt_path, renormalize));
      doc["efficiency"] = efficiency(tightened_eff ? tightened(boxes) : boxes);
      doc["tightened"] = tightened_eff;
      write_json(summary_out, doc);
    };
  });

  // sweep
  std::string ood_path, pareto_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Coverage/efficiency/AUROC over every fitted alpha");
  sweep_cmd->add_option("--model", model_path)->required();
  sweep_cmd->add_option("--test", test_path)->required();
  sweep_cmd->add_option("--gt", gt_path);
  sweep_cmd->add_flag("--renormalize", renormalize);
  sweep_cmd->add_option("--ood", ood_path, "OOD logits; adds an AUROC column");
  sweep_cmd->add_option("--measure", measure_arg, "EU measure for AUROC: entropy or zero-one");
  sweep_cmd->add_flag("--tightened", tightened_eff);
  sweep_cmd->add_option("-o,--output", pareto_out)->required();
  sweep_cmd->callback([&] {
    action = [&] {
      const auto model = io::read_model(model_path);
      const auto test = io::read_logits(test_path);
      std::optional<std::vector<ProbabilityVector>> gts;
      std::optional<LogitMatrix> ood;
      if (!gt_path.empty()) gts = io::read_distributions(gt_path, renormalize);
      if (!ood_path.empty()) ood = io::read_logits(ood_path);
      const auto summary = pareto_sweep(model, test, gts ? &*gts : nullptr, ood ? &*ood : nullptr,
                                        SweepOptions{parse_eu_measure(measure_arg), tightened_eff, worker_count()});
      std::string csv = "alpha,coverage,efficiency,auroc\n";
      for (const auto& r : summary.rows) {
        csv += io::format_double(r.alpha) + "," + json_number(r.coverage) + "," + io::format_double(r.efficiency) +
               "," + json_number(r.auroc) + "\n";
      }
      io::write_text(pareto_out, csv);
    };
  });

  // ood
  std::string id_path, auroc_out;
  auto* ood_cmd = app.add_subcommand("ood", "AUROC of epistemic uncertainty separating OOD from ID rows");
  ood_cmd->add_option("--model", model_path)->required();
  ood_cmd->add_option("--id", id_path)->required();
  ood_cmd->add_option("--ood", ood_path)->required();
  ood_cmd->add_option("--alpha", alpha)->required();
  ood_cmd->add_option("--measure", measure_arg);
  ood_cmd->add_option("-o,--output", auroc_out)->required();
  ood_cmd->callback([&] {
    action = [&] {
      const auto measure = parse_eu_measure(measure_arg);
      const auto model = io::read_model(model_path);
      const std::size_t threads = worker_count();
      const auto id_scores = epistemic_scores(predict_boxes(model, io::read_logits(id_path), alpha, threads), measure, threads);
      const auto ood_scores =
          epistemic_scores(predict_boxes(model, io::read_logits(ood_path), alpha, threads), measure, threads);
      nlohmann::ordered_json doc;
      doc["alpha"] = alpha;
      doc["measure"] = measure == EuMeasure::Entropy ? "entropy" : "zero-one";
      doc["n_id"] = id_scores.size();
      doc["n_ood"] = ood_scores.size();
      doc["auroc"] = auroc(ood_scores, id_scores);
      write_json(auroc_out, doc);
    };
  });

  // select
  std::string pool_path, indices_out;
  std::size_t m = 0;
  auto* select_cmd = app.add_subcommand("select", "Pick the m pool rows with the largest epistemic uncertainty");
  select_cmd->add_option("--model", model_path)->required();
  select_cmd->add_option("--pool", pool_path)->required();
  select_cmd->add_option("--alpha", alpha)->required();
  select_cmd->add_option("-m", m, "Number of rows to select")->required();
  select_cmd->add_option("--measure", measure_arg);
  select_cmd->add_option("-o,--output", indices_out)->required();
  select_cmd->callback([&] {
    action = [&] {
      const auto measure = parse_eu_measure(measure_arg);
      const auto model = io::read_model(model_path);
      const auto boxes = predict_boxes(model, io::read_logits(pool_path), alpha, worker_count());
      const auto scores = epistemic_scores(boxes, measure, worker_count());
      std::string csv = "row,eu\n";
      for (std::size_t i : rank_by_uncertainty(boxes, measure, m)) {
        csv += std::to_string(i + 1) + "," + io::format_double(scores[i]) + "\n";
      }
      io::write_text(indices_out, csv);
    };
  });

  // spider
  std::string mle_path, names_arg, svg_out;
  std::size_t row = 0;
  double radial_max = 1.0;
  int size_px = 640;
  auto* spider_cmd = app.add_subcommand("spider", "Credal spider plot of one boxes row as SVG");
  spider_cmd->add_option("--boxes", boxes_path)->required();
  spider_cmd->add_option("--row", row, "1-based row of the boxes file")->required();
  spider_cmd->add_option("--mle", mle_path, "CSV p_1..p_K; the same row is drawn as a polygon");
  spider_cmd->add_option("--gt", gt_path, "CSV p_1..p_K; the same row is drawn as dots");
  spider_cmd->add_flag("--renormalize", renormalize);
  spider_cmd->add_option("--names", names_arg, "Comma-separated class names (default 1..K)");
  spider_cmd->add_option("--radial-max", radial_max);
  spider_cmd->add_option("--size", size_px);
  spider_cmd->add_option("-o,--output", svg_out)->required();
  spider_cmd->callback([&] {
    action = [&] {
      const auto boxes = io::read_boxes(boxes_path);
      const std::size_t i = row_index(row, boxes.size(), boxes_path);
      const std::size_t kk = boxes[i].size();
      std::vector<std::string> names;
      if (names_arg.empty()) {
        for (std::size_t k = 0; k < kk; ++k) names.push_back(std::to_string(k + 1));
      } else {
        std::stringstream ss(names_arg);
        std::string name;
        while (std::getline(ss, name, ',')) names.push_back(name);
      }
      SpiderPlotSpec spec{names, boxes[i], std::nullopt, std::nullopt, radial_max, size_px};
      if (!mle_path.empty()) {
        auto ps = io::read_distributions(mle_path, renormalize);
        spec.mle = ps[row_index(row, ps.size(), mle_path)];
      }
      if (!gt_path.empty()) {
        auto ps = io::read_distributions(gt_path, renormalize);
        spec.gt = ps[row_index(row, ps.size(), gt_path)];
      }
      emit_spider_svg(spec, svg_out);
    };
  });

  // synth
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic task with known ground truth");
  synth_cmd->add_option("--config", config_path, "JSON with K, n_train, n_test, n_ood, d, separation, ...")
      ->required();
  synth_cmd->add_option("--seed", seed, "Overrides the config seed");
  synth_cmd->add_option("-o,--output", out_dir, "Output directory")->required();
  synth_cmd->callback([&] {
    action = [&] {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(io::read_text(config_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, config_path + ": " + e.what());
      }
      SynthConfig cfg;
      try {
        cfg.num_classes = doc.value("K", cfg.num_classes);
        cfg.n_train = doc.value("n_train", cfg.n_train);
        cfg.n_test = doc.value("n_test", cfg.n_test);
        cfg.n_ood = doc.value("n_ood", cfg.n_ood);
        cfg.dim = doc.value("d", cfg.dim);
        cfg.separation = doc.value("separation", cfg.separation);
        cfg.miscal_bias = doc.value("miscal_bias", cfg.miscal_bias);
        cfg.miscal_noise = doc.value("miscal_noise", cfg.miscal_noise);
        cfg.seed = doc.value("seed", cfg.seed);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, config_path + ": " + e.what());
      }
      if (seed) cfg.seed = *seed;
      const auto data = generate(cfg);
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      require(!ec, ErrorCode::IoError, "cannot create '" + out_dir + "': " + ec.message());
      const std::filesystem::path dir(out_dir);
      io::write_text((dir / "train.csv").string(), io::format_logits_csv(data.train.logits(), data.train.labels()));
      io::write_text((dir / "test.csv").string(), io::format_logits_csv(data.test_logits));
      io::write_text((dir / "test_gt.csv").string(), io::format_distributions_csv(data.test_gts));
      io::write_text((dir / "ood.csv").string(), io::format_logits_csv(data.ood_logits));
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_solver_error(e.code()) ? 2 : 1;
  }

  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_solver_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace credal::cli
