// anchorpose command-line entry point.
//
// Exit codes: 0 success, 1 configuration error, 2 data error,
// 3 internal invariant violation.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "anchorpose/bench.hpp"

namespace ap = anchorpose;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

struct InvariantViolation : ap::Error {
  using Error::Error;
};

const std::vector<std::string> kGroups{"tetra12", "octa24", "icosa60"};

ap::Json read_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ap::ConfigError("cannot open '" + path + "'");
  try {
    return ap::Json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw ap::ConfigError("'" + path + "': " + e.what());
  }
}

void write_text(const std::filesystem::path &path, const std::string &text) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out)
    throw ap::Error("cannot write '" + path.string() + "'");
}

ap::Json verify_group(ap::AnchorGroupKind kind) {
  const auto set = ap::generate_anchors(kind);
  double closure = 0.0;
  for (const auto &a : set.quats)
    for (const auto &b : set.quats) {
      const auto c = ap::compose(a, b);
      closure = std::max(closure, ap::geodesic_angle(c, set.quats[ap::nearest_anchor(c, set)]));
    }
  bool self_nearest = true;
  for (std::size_t i = 0; i < set.size(); ++i)
    self_nearest = self_nearest && ap::nearest_anchor(set.quats[i], set) == i;
  const bool ok = set.size() == ap::group_order(kind) &&
                  set.quats.front() == ap::UnitQuaternion::identity() && closure < 1e-9 &&
                  self_nearest;
  return ap::Json{{"kind", ap::to_string(kind)},
                  {"size", set.size()},
                  {"identity_first", set.quats.front() == ap::UnitQuaternion::identity()},
                  {"max_closure_error_rad", closure},
                  {"min_pairwise_angle_deg", set.min_pairwise_angle * 180 / std::numbers::pi},
                  {"covering_radius_deg", set.covering_radius * 180 / std::numbers::pi},
                  {"ok", ok}};
}

struct ShapeFlags {
  std::string model_path;
  std::string shape = "blob";
  std::vector<double> dims;
  std::size_t points = 500;
  std::string sampling = "random";
  bool symmetric = false;
};

ap::ObjectModel load_or_generate(const ShapeFlags &f, std::uint64_t seed) {
  if (!f.model_path.empty()) {
    if (f.symmetric)
      return ap::load_ply(f.model_path, true);
    return ap::load_ply(f.model_path);
  }
  ap::BenchConfig cfg;
  cfg.model = f.shape;
  cfg.dims = f.dims;
  cfg.model_points = f.points;
  cfg.sampling = f.sampling;
  cfg.seed = seed;
  return ap::bench_model(cfg);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Rotation anchors, 3D RANSAC center voting and pose-error metrics"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(ap::kToolVersion));

  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string config_path;
  std::string out_dir;
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", config_path, "BenchConfig JSON (or a bench report)");
  app.add_option("--out", out_dir, "Output directory");

  // anchors
  auto *anchors_cmd = app.add_subcommand("anchors", "Inspect the anchor groups");
  anchors_cmd->require_subcommand(1);
  std::string group;
  auto *dump_cmd = anchors_cmd->add_subcommand("dump", "Print a group's quaternions as JSON");
  dump_cmd->add_option("--group", group)->required()->check(CLI::IsMember(kGroups));
  auto *verify_cmd = anchors_cmd->add_subcommand("verify", "Check the group invariants");
  verify_cmd->add_option("--group", group)->check(CLI::IsMember(kGroups));

  // fit
  auto *fit_cmd = app.add_subcommand("fit", "Compare direct and anchored rotation fits");
  ShapeFlags shape;
  std::string fit_anchors = "icosa60";
  std::size_t trials = 10;
  ap::FitConfig fit_cfg;
  fit_cmd->add_option("--model", shape.model_path, "ASCII PLY model");
  fit_cmd->add_flag("--symmetric", shape.symmetric, "Treat the model as symmetric");
  fit_cmd->add_option("--shape", shape.shape, "Synthetic shape when no --model")
      ->check(CLI::IsMember({"blob", "cylinder", "box"}));
  fit_cmd->add_option("--dims", shape.dims, "cylinder: radius height; box: dx dy dz");
  fit_cmd->add_option("--points", shape.points, "Synthetic model size");
  fit_cmd->add_option("--sampling", shape.sampling)->check(CLI::IsMember({"random", "symmetric"}));
  fit_cmd->add_option("--anchors", fit_anchors)
      ->check(CLI::IsMember({"none", "tetra12", "octa24", "icosa60"}));
  fit_cmd->add_option("--trials", trials)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iters", fit_cfg.max_iters);
  fit_cmd->add_option("--step", fit_cfg.step_size);

  // vote
  auto *vote_cmd = app.add_subcommand("vote", "RANSAC center vote on a vector field");
  std::string field_path;
  ap::RansacConfig ransac;
  vote_cmd->add_option("--field", field_path, "Field JSON {points, dirs}")->required();
  vote_cmd->add_option("--theta", ransac.inlier_cos_threshold);
  vote_cmd->add_option("--batch", ransac.batch_size);
  vote_cmd->add_option("--max-rounds", ransac.max_rounds);

  // eval
  auto *eval_cmd = app.add_subcommand("eval", "Score predicted poses against ground truth");
  std::string gt_path, pred_path, models_dir, metric = "add_auto";
  ap::EvalOptions eval_opts;
  eval_cmd->add_option("--gt", gt_path)->required();
  eval_cmd->add_option("--pred", pred_path)->required();
  eval_cmd->add_option("--models", models_dir)->required();
  eval_cmd->add_option("--auc-max", eval_opts.auc_max);
  eval_cmd->add_option("--add-frac", eval_opts.add_frac);
  eval_cmd->add_option("--curve-points", eval_opts.curve_points);
  eval_cmd->add_option("--metric", metric)->check(CLI::IsMember({"add_auto", "add", "adds"}));

  // bench
  auto *bench_cmd = app.add_subcommand("bench", "Run the synthetic end-to-end benchmark");
  ap::BenchConfig bench_flags;
  bench_cmd->add_option("--model", bench_flags.model)
      ->check(CLI::IsMember({"blob", "cylinder", "box", "ply"}));
  bench_cmd->add_option("--model-path", bench_flags.model_path);
  bench_cmd->add_flag("--symmetric", bench_flags.symmetric);
  bench_cmd->add_option("--dims", bench_flags.dims);
  bench_cmd->add_option("--model-points", bench_flags.model_points);
  bench_cmd->add_option("--sampling", bench_flags.sampling);
  bench_cmd->add_option("--n-points", bench_flags.n_points);
  bench_cmd->add_option("--outliers", bench_flags.outlier_fraction);
  bench_cmd->add_option("--dir-noise", bench_flags.dir_noise_deg, "degrees");
  bench_cmd->add_option("--rot-noise", bench_flags.rot_noise_deg, "degrees");
  bench_cmd->add_option("--instances", bench_flags.n_instances);
  bench_cmd->add_option("--anchors", bench_flags.anchors);
  bench_cmd->add_option("--metric", bench_flags.metric);
  bench_cmd->add_option("--theta", bench_flags.ransac.inlier_cos_threshold);
  bench_cmd->add_option("--batch", bench_flags.ransac.batch_size);
  bench_cmd->add_option("--max-rounds", bench_flags.ransac.max_rounds);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const std::uint64_t base_seed = seed.value_or(0);

    if (*dump_cmd) {
      const auto set = ap::generate_anchors(*ap::parse_anchor_group(group));
      const auto text = ap::to_json(set).dump() + "\n";
      if (out_dir.empty())
        std::cout << text;
      else
        write_text(std::filesystem::path(out_dir) / ("anchors_" + group + ".json"), text);
      return 0;
    }

    if (*verify_cmd) {
      ap::Json report = ap::Json::array();
      bool ok = true;
      double previous_radius = 1e9;
      for (const auto &name : kGroups) {
        if (!group.empty() && name != group)
          continue;
        auto entry = verify_group(*ap::parse_anchor_group(name));
        const double radius = entry["covering_radius_deg"].get<double>();
        entry["covering_radius_decreasing"] = group.empty() ? radius < previous_radius : true;
        previous_radius = radius;
        ok = ok && entry["ok"].get<bool>() && entry["covering_radius_decreasing"].get<bool>();
        report.push_back(entry);
      }
      std::cout << report.dump(2) << "\n";
      if (!ok)
        throw InvariantViolation("anchor group verification failed");
      return 0;
    }

    if (*fit_cmd) {
      const auto model = load_or_generate(shape, base_seed);
      std::optional<ap::AnchorSet> anchors;
      if (fit_anchors != "none")
        anchors = ap::generate_anchors(*ap::parse_anchor_group(fit_anchors));
      ap::Rng rng = ap::make_rng(base_seed, "fit");
      std::vector<ap::UnitQuaternion> gts, inits;
      for (std::size_t t = 0; t < trials; ++t) {
        gts.push_back(ap::random_rotation(rng));
        inits.push_back(ap::random_rotation(rng));
      }
      std::vector<ap::Json> lines(trials);
      ap::parallel_for(trials, threads, [&](std::size_t t) {
        ap::Json j{{"trial", t}, {"gt_wxyz", ap::quat_json(gts[t])}};
        ap::FitResult r;
        if (anchors) {
          auto fit = ap::fit_anchored(model, gts[t], *anchors, fit_cfg);
          j["anchor_index"] = fit.selected_index;
          r = fit.selected;
        } else {
          j["init_wxyz"] = ap::quat_json(inits[t]);
          r = ap::fit_direct(model, gts[t], inits[t], fit_cfg);
        }
        j["rotation_wxyz"] = ap::quat_json(r.rotation);
        j["normalized_loss"] = r.normalized_loss;
        j["iters"] = r.iters;
        j["converged"] = r.converged;
        j["success"] = r.normalized_loss < ap::kFitSuccessTolerance;
        lines[t] = std::move(j);
      });
      std::size_t successes = 0;
      std::string text;
      for (const auto &j : lines) {
        successes += j["success"].get<bool>();
        text += j.dump() + "\n";
      }
      const ap::Json summary{{"summary",
                              {{"model", model.id()},
                               {"symmetric", model.symmetric()},
                               {"anchors", fit_anchors},
                               {"trials", trials},
                               {"successes", successes},
                               {"success_rate", static_cast<double>(successes) /
                                                    static_cast<double>(trials)},
                               {"tolerance", ap::kFitSuccessTolerance}}}};
      text += summary.dump() + "\n";
      if (out_dir.empty())
        std::cout << text;
      else
        write_text(std::filesystem::path(out_dir) / "fit.jsonl", text);
      return 0;
    }

    if (*vote_cmd) {
      std::ifstream in(field_path);
      if (!in)
        throw ap::ParseError("cannot open '" + field_path + "'", 0);
      ap::Json j;
      try {
        j = ap::Json::parse(in);
      } catch (const nlohmann::json::exception &e) {
        throw ap::ParseError(e.what(), 0);
      }
      const auto field = ap::vector_field_from_json(j);
      ransac.seed = base_seed;
      const auto text = ap::to_json(ap::ransac_vote(field, ransac, threads)).dump() + "\n";
      if (out_dir.empty())
        std::cout << text;
      else
        write_text(std::filesystem::path(out_dir) / "vote.json", text);
      return 0;
    }

    if (*eval_cmd) {
      const auto report =
          ap::evaluate_records(ap::read_pose_records(gt_path), ap::read_pose_records(pred_path),
                               models_dir, eval_opts, ap::parse_metric(metric));
      const auto text = ap::to_json(report).dump(2) + "\n";
      std::cout << text;
      const std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
      if (!out_dir.empty())
        write_text(dir / "eval.json", text);
      write_text(dir / "curve_add.csv", ap::curve_csv(report.curve));
      return 0;
    }

    if (*bench_cmd) {
      ap::BenchConfig cfg;
      if (!config_path.empty()) {
        auto j = read_json_file(config_path);
        if (j.contains("config") && j.contains("records"))
          j = j["config"]; // replay from a report
        cfg = ap::bench_config_from_json(j);
      }
      // explicitly given flags override the file
      auto given = [&](const char *name) { return bench_cmd->count(name) > 0; };
      if (given("--model")) cfg.model = bench_flags.model;
      if (given("--model-path")) cfg.model_path = bench_flags.model_path;
      if (given("--symmetric")) cfg.symmetric = bench_flags.symmetric;
      if (given("--dims")) cfg.dims = bench_flags.dims;
      if (given("--model-points")) cfg.model_points = bench_flags.model_points;
      if (given("--sampling")) cfg.sampling = bench_flags.sampling;
      if (given("--n-points")) cfg.n_points = bench_flags.n_points;
      if (given("--outliers")) cfg.outlier_fraction = bench_flags.outlier_fraction;
      if (given("--dir-noise")) cfg.dir_noise_deg = bench_flags.dir_noise_deg;
      if (given("--rot-noise")) cfg.rot_noise_deg = bench_flags.rot_noise_deg;
      if (given("--instances")) cfg.n_instances = bench_flags.n_instances;
      if (given("--anchors")) cfg.anchors = bench_flags.anchors;
      if (given("--metric")) cfg.metric = bench_flags.metric;
      if (given("--theta")) cfg.ransac.inlier_cos_threshold = bench_flags.ransac.inlier_cos_threshold;
      if (given("--batch")) cfg.ransac.batch_size = bench_flags.ransac.batch_size;
      if (given("--max-rounds")) cfg.ransac.max_rounds = bench_flags.ransac.max_rounds;
      if (seed)
        cfg.seed = *seed;
      ap::validate(cfg);

      const auto report = ap::run_bench(cfg, threads);
      const std::filesystem::path dir = out_dir.empty() ? "bench_out" : out_dir;
      ap::emit_report(report, dir);
      std::size_t failed = 0;
      for (const auto &r : report.records)
        failed += !r.ok();
      std::cout << ap::Json{{"per_object", ap::to_json(report.aggregate)["per_object"]},
                            {"failed_instances", failed},
                            {"report", (dir / "report.json").string()}}
                       .dump(2)
                << "\n";
      const auto recomputed = ap::aggregate_records(report.records, report.diameter, cfg.eval);
      if (ap::to_json(recomputed) != ap::to_json(report.aggregate))
        throw InvariantViolation("aggregate does not match per-instance records");
      return 0;
    }
  } catch (const ap::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvariantViolation &e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const ap::ParseError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ap::DegenerateError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ap::PreconditionError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return 0;
}
