#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anchorpose/error.hpp"
#include "anchorpose/metrics.hpp"
#include "anchorpose/optim.hpp"
#include "anchorpose/voting.hpp"

namespace anchorpose {

using Json = nlohmann::ordered_json;

inline constexpr const char *kToolName = "anchorpose";
inline constexpr const char *kToolVersion = "0.1.0";

/// Invalid user configuration (bad flag values, unknown config keys).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Synthetic benchmark configuration. The JSON form uses the field names.
struct BenchConfig {
  std::string model = "blob"; // blob | cylinder | box | ply
  std::string model_path;     // when model == "ply"
  bool symmetric = false;     // ply only, when there is no sidecar
  std::vector<double> dims;   // cylinder: radius, height; box: dx, dy, dz
  std::size_t model_points = 500;
  std::string sampling = "random"; // random | symmetric
  std::size_t n_points = 500;      // field points per instance
  double outlier_fraction = 0.0;
  double dir_noise_deg = 0.0;
  double rot_noise_deg = 0.0;
  std::size_t n_instances = 10;
  std::string anchors = "icosa60"; // none | tetra12 | octa24 | icosa60
  std::string metric = "add_auto"; // add_auto | add | adds
  RansacConfig ransac;
  FitConfig fit;
  EvalOptions eval;
  std::uint64_t seed = 0;
};

/// Throws ConfigError on out-of-range fields.
void validate(const BenchConfig &cfg);

struct VoteStats {
  std::size_t rounds = 0;
  std::size_t hypotheses = 0;
  std::size_t inliers = 0;
  bool refined = false;
};

struct FitStats {
  std::optional<std::size_t> anchor_index; // unset for direct fits
  double normalized_loss = 0.0;
  std::size_t iters = 0;
  bool converged = false;
};

struct InstanceRecord {
  std::size_t index = 0;
  std::string object_id;
  Pose gt;
  /// Empty message means success.
  std::string failure;
  Pose estimate;
  PoseError error;
  double metric_error = 0.0;
  VoteStats vote;
  FitStats fit;

  bool ok() const { return failure.empty(); }
};

struct BenchReport {
  BenchConfig config;
  double diameter = 0.0;
  std::vector<InstanceRecord> records;
  EvalReport aggregate;
};

/// Builds the model a config describes (generated from the "model" sub-stream
/// of the seed, or loaded from PLY).
ObjectModel bench_model(const BenchConfig &cfg);

/// Runs every instance; failures are recorded per instance. Instances run on
/// up to `threads` workers and the report is assembled by index.
BenchReport run_bench(const BenchConfig &cfg, unsigned threads = 1);

/// Recomputes the aggregate from per-instance metric errors (failed
/// instances count as infinite error).
EvalReport aggregate_records(const std::vector<InstanceRecord> &records, double diameter,
                             const EvalOptions &opts);

// JSON and CSV

Json to_json(const BenchConfig &cfg);
/// Missing keys keep their defaults; unknown keys throw ConfigError.
BenchConfig bench_config_from_json(const Json &j);

Json to_json(const RansacConfig &cfg);
Json to_json(const FitConfig &cfg);
Json to_json(const VoteResult &r);
Json to_json(const EvalReport &r);
EvalReport eval_report_from_json(const Json &j);
Json to_json(const BenchReport &r);
Json to_json(const AnchorSet &set);
Json quat_json(const UnitQuaternion &q);
Json vec_json(const Vec3 &v);

/// Parses {"points": [[x,y,z],...], "dirs": [[x,y,z],...]} and validates it.
VectorField vector_field_from_json(const Json &j);

/// "threshold_m,accuracy" header plus one row per curve point.
std::string curve_csv(const std::vector<CurvePoint> &curve);

/// Writes report.json and curve_add.csv into `dir` (created if needed).
/// Throws Error when the directory or files are not writable.
void emit_report(const BenchReport &report, const std::filesystem::path &dir);

// Pose-record files (JSON Lines)

struct PoseRecord {
  std::string object_id;
  Pose pose;
};

/// One {"object_id", "rotation_wxyz", "translation_m"} object per line.
/// Throws ParseError with the line number.
std::vector<PoseRecord> read_pose_records(const std::filesystem::path &path);
void write_pose_records(const std::filesystem::path &path,
                        const std::vector<PoseRecord> &records);

ErrorMetric parse_metric(const std::string &name);

/// Pairs gt and pred records by position (object ids must agree), loads
/// `<models_dir>/<object_id>.ply` once per object and evaluates the metric.
EvalReport evaluate_records(const std::vector<PoseRecord> &gt,
                            const std::vector<PoseRecord> &pred,
                            const std::filesystem::path &models_dir,
                            const EvalOptions &opts, ErrorMetric metric);

} // namespace anchorpose
