#include "anchorpose/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "anchorpose/parallel.hpp"

namespace anchorpose {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

Vec3 vec_from_json(const Json &j) {
  if (!j.is_array() || j.size() != 3)
    throw ParseError("expected [x, y, z]", 0);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

UnitQuaternion quat_from_json(const Json &j) {
  if (!j.is_array() || j.size() != 4)
    throw ParseError("expected [w, x, y, z]", 0);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

// Copies known keys from j into the setters; anything else is a ConfigError.
template <typename Setters>
void read_object(const Json &j, const std::string &where, const Setters &setters) {
  if (!j.is_object())
    throw ConfigError(where + ": expected a JSON object");
  for (const auto &[key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError(where + "." + key + ": " + e.what());
    }
  }
}

using Setter = std::function<void(const Json &)>;

template <typename T> Setter set(T &field) {
  return [&field](const Json &v) { field = v.get<T>(); };
}

RansacConfig ransac_from_json(const Json &j, RansacConfig cfg) {
  read_object(j, "ransac",
              std::map<std::string, Setter>{
                  {"inlier_cos_threshold", set(cfg.inlier_cos_threshold)},
                  {"batch_size", set(cfg.batch_size)},
                  {"max_rounds", set(cfg.max_rounds)},
                  {"success_prob", set(cfg.success_prob)},
                  {"parallel_tolerance", set(cfg.parallel_tolerance)},
                  {"seed", set(cfg.seed)},
              });
  return cfg;
}

FitConfig fit_from_json(const Json &j, FitConfig cfg) {
  read_object(j, "fit",
              std::map<std::string, Setter>{
                  {"max_iters", set(cfg.max_iters)},
                  {"step_size", set(cfg.step_size)},
                  {"fd_eps", set(cfg.fd_eps)},
                  {"converge_tol", set(cfg.converge_tol)},
              });
  return cfg;
}

EvalOptions eval_from_json(const Json &j, EvalOptions opts) {
  read_object(j, "eval",
              std::map<std::string, Setter>{
                  {"add_frac", set(opts.add_frac)},
                  {"auc_max", set(opts.auc_max)},
                  {"curve_points", set(opts.curve_points)},
              });
  return opts;
}

Json to_json(const EvalOptions &o) {
  return Json{{"add_frac", o.add_frac}, {"auc_max", o.auc_max},
              {"curve_points", o.curve_points}};
}

double pick_metric(const PoseError &e, ErrorMetric metric, bool symmetric) {
  switch (metric) {
  case ErrorMetric::Add:
    return e.add;
  case ErrorMetric::Adds:
    return e.adds;
  case ErrorMetric::AddAuto:
    break;
  }
  return symmetric ? e.adds : e.add;
}

Json pose_json(const Pose &p) {
  return Json{{"rotation_wxyz", quat_json(p.rotation)},
              {"translation_m", vec_json(p.translation)}};
}

} // namespace

Json quat_json(const UnitQuaternion &q) { return Json::array({q.w(), q.x(), q.y(), q.z()}); }
Json vec_json(const Vec3 &v) { return Json::array({v.x(), v.y(), v.z()}); }

ErrorMetric parse_metric(const std::string &name) {
  if (name == "add_auto")
    return ErrorMetric::AddAuto;
  if (name == "add")
    return ErrorMetric::Add;
  if (name == "adds")
    return ErrorMetric::Adds;
  throw ConfigError("unknown metric '" + name + "' (add_auto | add | adds)");
}

void validate(const BenchConfig &cfg) {
  if (cfg.model != "blob" && cfg.model != "cylinder" && cfg.model != "box" &&
      cfg.model != "ply")
    throw ConfigError("model must be blob, cylinder, box or ply");
  if (cfg.model == "ply" && cfg.model_path.empty())
    throw ConfigError("model 'ply' needs model_path");
  if (cfg.model == "cylinder" && !cfg.dims.empty() && cfg.dims.size() != 2)
    throw ConfigError("cylinder dims are [radius, height]");
  if (cfg.model == "box" && !cfg.dims.empty() && cfg.dims.size() != 3)
    throw ConfigError("box dims are [dx, dy, dz]");
  if (std::any_of(cfg.dims.begin(), cfg.dims.end(), [](double d) { return !(d > 0); }))
    throw ConfigError("dims must be positive");
  if (cfg.sampling != "random" && cfg.sampling != "symmetric")
    throw ConfigError("sampling must be random or symmetric");
  if (cfg.model_points < 8)
    throw ConfigError("model_points must be >= 8");
  if (cfg.n_points < 2 || cfg.n_instances < 1)
    throw ConfigError("n_points must be >= 2 and n_instances >= 1");
  if (!(cfg.outlier_fraction >= 0.0 && cfg.outlier_fraction < 1.0))
    throw ConfigError("outlier_fraction must be in [0, 1)");
  if (!(cfg.dir_noise_deg >= 0.0) || !(cfg.rot_noise_deg >= 0.0))
    throw ConfigError("noise levels must be non-negative");
  if (cfg.anchors != "none" && !parse_anchor_group(cfg.anchors))
    throw ConfigError("anchors must be none, tetra12, octa24 or icosa60");
  parse_metric(cfg.metric);
  const auto &r = cfg.ransac;
  if (!(r.inlier_cos_threshold > -1.0 && r.inlier_cos_threshold < 1.0) ||
      r.batch_size < 1 || r.max_rounds < 1 ||
      !(r.success_prob > 0.0 && r.success_prob < 1.0) || !(r.parallel_tolerance >= 0.0))
    throw ConfigError("invalid ransac settings");
  const auto &f = cfg.fit;
  if (f.max_iters < 1 || !(f.step_size > 0) || !(f.fd_eps > 0) || !(f.converge_tol > 0))
    throw ConfigError("invalid fit settings");
  if (!(cfg.eval.add_frac > 0) || !(cfg.eval.auc_max > 0) || cfg.eval.curve_points < 1)
    throw ConfigError("invalid eval settings");
}

Json to_json(const RansacConfig &c) {
  return Json{{"inlier_cos_threshold", c.inlier_cos_threshold},
              {"batch_size", c.batch_size},
              {"max_rounds", c.max_rounds},
              {"success_prob", c.success_prob},
              {"parallel_tolerance", c.parallel_tolerance},
              {"seed", c.seed}};
}

Json to_json(const FitConfig &c) {
  return Json{{"max_iters", c.max_iters},
              {"step_size", c.step_size},
              {"fd_eps", c.fd_eps},
              {"converge_tol", c.converge_tol}};
}

Json to_json(const BenchConfig &c) {
  Json ransac = to_json(c.ransac);
  ransac.erase("seed"); // derived from the global seed
  return Json{{"model", c.model},
              {"model_path", c.model_path},
              {"symmetric", c.symmetric},
              {"dims", c.dims},
              {"model_points", c.model_points},
              {"sampling", c.sampling},
              {"n_points", c.n_points},
              {"outlier_fraction", c.outlier_fraction},
              {"dir_noise_deg", c.dir_noise_deg},
              {"rot_noise_deg", c.rot_noise_deg},
              {"n_instances", c.n_instances},
              {"anchors", c.anchors},
              {"metric", c.metric},
              {"ransac", ransac},
              {"fit", to_json(c.fit)},
              {"eval", to_json(c.eval)},
              {"seed", c.seed}};
}

BenchConfig bench_config_from_json(const Json &j) {
  BenchConfig c;
  read_object(j, "config",
              std::map<std::string, Setter>{
                  {"model", set(c.model)},
                  {"model_path", set(c.model_path)},
                  {"symmetric", set(c.symmetric)},
                  {"dims", set(c.dims)},
                  {"model_points", set(c.model_points)},
                  {"sampling", set(c.sampling)},
                  {"n_points", set(c.n_points)},
                  {"outlier_fraction", set(c.outlier_fraction)},
                  {"dir_noise_deg", set(c.dir_noise_deg)},
                  {"rot_noise_deg", set(c.rot_noise_deg)},
                  {"n_instances", set(c.n_instances)},
                  {"anchors", set(c.anchors)},
                  {"metric", set(c.metric)},
                  {"ransac", [&](const Json &v) {
                     c.ransac = ransac_from_json(v, c.ransac);
                     if (v.contains("seed"))
                       throw ConfigError("ransac.seed is derived from the global seed");
                   }},
                  {"fit", [&](const Json &v) { c.fit = fit_from_json(v, c.fit); }},
                  {"eval", [&](const Json &v) { c.eval = eval_from_json(v, c.eval); }},
                  {"seed", set(c.seed)},
              });
  return c;
}

ObjectModel bench_model(const BenchConfig &cfg) {
  validate(cfg);
  if (cfg.model == "ply") {
    if (std::filesystem::exists(meta_path_for(cfg.model_path)))
      return load_ply(cfg.model_path);
    return load_ply(cfg.model_path, cfg.symmetric);
  }
  SyntheticShapeSpec spec;
  spec.id = cfg.model;
  spec.sampling = cfg.sampling == "symmetric" ? Sampling::Symmetric : Sampling::Random;
  if (cfg.model == "cylinder") {
    CylinderSpec s;
    s.n = cfg.model_points;
    if (!cfg.dims.empty())
      s.radius = cfg.dims[0], s.height = cfg.dims[1];
    spec.shape = s;
  } else if (cfg.model == "box") {
    BoxSpec s;
    s.n = cfg.model_points;
    if (!cfg.dims.empty())
      s.dx = cfg.dims[0], s.dy = cfg.dims[1], s.dz = cfg.dims[2];
    spec.shape = s;
  } else {
    spec.shape = BlobSpec{cfg.model_points};
  }
  Rng rng = make_rng(cfg.seed, "model");
  return generate_shape(spec, rng);
}

namespace {

InstanceRecord run_instance(const BenchConfig &cfg, const ObjectModel &model,
                            const std::optional<AnchorSet> &anchors, std::size_t i) {
  InstanceRecord rec;
  rec.index = i;
  rec.object_id = model.id();

  Rng pose_rng = make_rng(cfg.seed, "pose", i);
  std::uniform_real_distribution<double> cube(-0.5, 0.5);
  rec.gt.rotation = random_rotation(pose_rng);
  rec.gt.translation = Vec3(cube(pose_rng), cube(pose_rng), cube(pose_rng));

  try {
    Rng noise_rng = make_rng(cfg.seed, "noise", i);
    std::uniform_int_distribution<std::size_t> pick(0, model.size() - 1);
    std::vector<Vec3> cloud;
    cloud.reserve(cfg.n_points);
    for (std::size_t k = 0; k < cfg.n_points; ++k)
      cloud.push_back(rotate(rec.gt.rotation, model.points()[pick(noise_rng)]) +
                      rec.gt.translation);
    VectorField field = make_field(cloud, rec.gt.translation);

    std::vector<std::size_t> order(cfg.n_points);
    for (std::size_t k = 0; k < order.size(); ++k)
      order[k] = k;
    std::shuffle(order.begin(), order.end(), noise_rng);
    const auto n_out = static_cast<std::size_t>(
        std::llround(cfg.outlier_fraction * static_cast<double>(cfg.n_points)));
    std::normal_distribution<double> gauss;
    const double sigma = cfg.dir_noise_deg * kDegToRad;
    for (std::size_t r = 0; r < order.size(); ++r) {
      Vec3 &v = field.dirs[order[r]];
      if (r < n_out) {
        v = random_unit_vector(noise_rng);
      } else if (sigma > 0.0) {
        const Vec3 e1 = v.unitOrthogonal();
        const Vec3 e2 = v.cross(e1);
        v = (v + sigma * (gauss(noise_rng) * e1 + gauss(noise_rng) * e2)).normalized();
      }
    }

    RansacConfig rc = cfg.ransac;
    rc.seed = substream_seed(cfg.seed, "ransac", i);
    const VoteResult vote = ransac_vote(field, rc);
    rec.vote = {vote.rounds, vote.hypotheses_evaluated, vote.inlier_indices.size(),
                vote.refined};

    UnitQuaternion target = rec.gt.rotation;
    if (cfg.rot_noise_deg > 0.0) {
      const double angle = gauss(noise_rng) * cfg.rot_noise_deg * kDegToRad;
      target = compose(exp_map({random_unit_vector(noise_rng) * angle}), target);
    }
    FitResult fit;
    if (anchors) {
      auto anchored = fit_anchored(model, target, *anchors, cfg.fit);
      rec.fit.anchor_index = anchored.selected_index;
      fit = std::move(anchored.selected);
    } else {
      fit = fit_direct(model, target, random_rotation(pose_rng), cfg.fit);
    }
    rec.fit.normalized_loss = fit.normalized_loss;
    rec.fit.iters = fit.iters;
    rec.fit.converged = fit.converged;

    rec.estimate = {fit.rotation, vote.center};
    rec.error = decoupled_errors(rec.estimate, rec.gt, model);
    rec.metric_error = pick_metric(rec.error, parse_metric(cfg.metric), model.symmetric());
  } catch (const Error &e) {
    rec.failure = e.what();
  }
  return rec;
}

} // namespace

EvalReport aggregate_records(const std::vector<InstanceRecord> &records, double diameter,
                             const EvalOptions &opts) {
  std::vector<EvalSample> samples;
  for (const auto &r : records)
    samples.push_back({r.object_id,
                       r.ok() ? r.metric_error : std::numeric_limits<double>::infinity(),
                       diameter});
  return build_report(samples, opts);
}

BenchReport run_bench(const BenchConfig &cfg, unsigned threads) {
  validate(cfg);
  BenchReport report;
  report.config = cfg;
  const ObjectModel model = bench_model(cfg);
  report.diameter = model.diameter();
  std::optional<AnchorSet> anchors;
  if (cfg.anchors != "none")
    anchors = generate_anchors(*parse_anchor_group(cfg.anchors));

  report.records.resize(cfg.n_instances);
  parallel_for(cfg.n_instances, threads, [&](std::size_t i) {
    report.records[i] = run_instance(cfg, model, anchors, i);
  });
  report.aggregate = aggregate_records(report.records, report.diameter, cfg.eval);
  return report;
}

Json to_json(const VoteResult &r) {
  return Json{{"center", vec_json(r.center)},
              {"inlier_count", r.inlier_indices.size()},
              {"inlier_indices", r.inlier_indices},
              {"hypotheses_evaluated", r.hypotheses_evaluated},
              {"rounds", r.rounds},
              {"refined", r.refined},
              {"best",
               {{"point", vec_json(r.best.point)},
                {"inlier_count", r.best.inlier_count},
                {"source_index", r.best.source_index}}}};
}

Json to_json(const EvalReport &r) {
  Json per = Json::object();
  for (const auto &[id, s] : r.per_object)
    per[id] = Json{{"accuracy", s.accuracy}, {"auc", s.auc}, {"n", s.n}};
  Json curve = Json::array();
  for (const auto &p : r.curve)
    curve.push_back(Json::array({p.threshold, p.accuracy}));
  return Json{{"per_object", per}, {"curve", curve}};
}

EvalReport eval_report_from_json(const Json &j) {
  EvalReport r;
  for (const auto &[id, s] : j.at("per_object").items())
    r.per_object[id] = {s.at("accuracy").get<double>(), s.at("auc").get<double>(),
                        s.at("n").get<std::size_t>()};
  for (const auto &p : j.at("curve"))
    r.curve.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return r;
}

Json to_json(const BenchReport &r) {
  Json records = Json::array();
  for (const auto &rec : r.records) {
    Json j{{"index", rec.index}, {"object_id", rec.object_id}, {"gt", pose_json(rec.gt)}};
    if (!rec.ok()) {
      j["status"] = "failed";
      j["message"] = rec.failure;
    } else {
      j["status"] = "ok";
      j["estimate"] = pose_json(rec.estimate);
      j["error"] = Json{{"add_m", rec.error.add},
                        {"adds_m", rec.error.adds},
                        {"rot_angle_rad", rec.error.rot_angle},
                        {"trans_err_m", rec.error.trans_err}};
      j["metric_error"] = rec.metric_error;
      j["vote"] = Json{{"rounds", rec.vote.rounds},
                       {"hypotheses", rec.vote.hypotheses},
                       {"inliers", rec.vote.inliers},
                       {"refined", rec.vote.refined}};
      Json fit{{"normalized_loss", rec.fit.normalized_loss},
               {"iters", rec.fit.iters},
               {"converged", rec.fit.converged}};
      fit["anchor_index"] = rec.fit.anchor_index ? Json(*rec.fit.anchor_index) : Json();
      j["fit"] = fit;
    }
    records.push_back(std::move(j));
  }
  return Json{{"tool", kToolName},
              {"version", kToolVersion},
              {"config", to_json(r.config)},
              {"diameter_m", r.diameter},
              {"records", records},
              {"aggregate", to_json(r.aggregate)}};
}

Json to_json(const AnchorSet &set) {
  Json quats = Json::array();
  for (const auto &q : set.quats)
    quats.push_back(quat_json(q));
  return Json{{"kind", to_string(set.kind)}, {"quats", quats}};
}

VectorField vector_field_from_json(const Json &j) {
  VectorField field;
  try {
    for (const auto &p : j.at("points"))
      field.points.push_back(vec_from_json(p));
    for (const auto &d : j.at("dirs"))
      field.dirs.push_back(vec_from_json(d));
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("vector field: ") + e.what(), 0);
  }
  validate_field(field);
  return field;
}

std::string curve_csv(const std::vector<CurvePoint> &curve) {
  std::string out = "threshold_m,accuracy\n";
  for (const auto &p : curve)
    out += number(p.threshold) + "," + number(p.accuracy) + "\n";
  return out;
}

void emit_report(const BenchReport &report, const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw Error("cannot create '" + dir.string() + "': " + ec.message());
  auto write = [&](const std::string &name, const std::string &text) {
    std::ofstream out(dir / name, std::ios::binary);
    out << text;
    if (!out)
      throw Error("cannot write '" + (dir / name).string() + "'");
  };
  write("report.json", to_json(report).dump(2) + "\n");
  write("curve_add.csv", curve_csv(report.aggregate.curve));
}

std::vector<PoseRecord> read_pose_records(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open '" + path.string() + "'", 0);
  std::vector<PoseRecord> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    try {
      const auto j = Json::parse(line);
      out.push_back({j.at("object_id").get<std::string>(),
                     {quat_from_json(j.at("rotation_wxyz")),
                      vec_from_json(j.at("translation_m"))}});
    } catch (const nlohmann::json::exception &e) {
      throw ParseError(e.what(), lineno);
    } catch (const ParseError &e) {
      throw ParseError(e.what(), lineno);
    } catch (const PreconditionError &e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

void write_pose_records(const std::filesystem::path &path,
                        const std::vector<PoseRecord> &records) {
  std::ofstream out(path);
  for (const auto &r : records)
    out << Json{{"object_id", r.object_id},
                {"rotation_wxyz", quat_json(r.pose.rotation)},
                {"translation_m", vec_json(r.pose.translation)}}
               .dump()
        << '\n';
  if (!out)
    throw Error("cannot write '" + path.string() + "'");
}

EvalReport evaluate_records(const std::vector<PoseRecord> &gt,
                            const std::vector<PoseRecord> &pred,
                            const std::filesystem::path &models_dir,
                            const EvalOptions &opts, ErrorMetric metric) {
  if (gt.size() != pred.size())
    throw PreconditionError("gt has " + std::to_string(gt.size()) +
                            " records but pred has " + std::to_string(pred.size()));
  std::map<std::string, ObjectModel> models;
  std::vector<EvalSample> samples;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i].object_id != pred[i].object_id)
      throw PreconditionError("record " + std::to_string(i + 1) + ": object ids differ ('" +
                              gt[i].object_id + "' vs '" + pred[i].object_id + "')");
    auto it = models.find(gt[i].object_id);
    if (it == models.end())
      it = models.emplace(gt[i].object_id, load_ply(models_dir / (gt[i].object_id + ".ply")))
               .first;
    const auto &model = it->second;
    const PoseError e = decoupled_errors(pred[i].pose, gt[i].pose, model);
    samples.push_back({model.id(), pick_metric(e, metric, model.symmetric()),
                       model.diameter()});
  }
  return build_report(samples, opts);
}

} // namespace anchorpose
