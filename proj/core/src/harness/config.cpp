#include "coopalign/harness/config.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "coopalign/common/error.hpp"
#include "coopalign/fusion/rasterize.hpp"
#include "coopalign/geometry/cloud_io.hpp"

namespace coopalign::harness {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

PipelineConfig::PipelineConfig() {
  oracle.noise.inlier_sigma = 0.02;
  oracle.noise.outlier_fraction = 0.3;
  oracle.noise.outlier_scale = 10.0;
  oracle.noise.bias_correlation_length = 10.0;
  oracle.noise.bias_amplitude = 0.0;
  fsa.max_dx = 1.0;
  fsa.max_dy = 1.0;
  fsa.step_xy = 0.5;
  fsa.max_dtheta = deg2rad(3.0);
  fsa.step_theta = deg2rad(1.0);
  fsa.channel = fusion::kMaxHeight;
  decode.score_threshold = 0.05;
  decode.pool_rows = 3;
  decode.pool_cols = 9;
  decode.nms_iou = 0.1;
}

void PipelineConfig::validate() const {
  try {
    grid.validate();
    if (!(downsample_voxel > 0.0)) throw ConfigError("pipeline.downsample_voxel must be positive");
    oracle.validate();
    ransac.validate();
    fsa.validate();
    vit.validate();
    decode.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("pipeline: ") + e.what());
  }
  if (fsa.channel < 0 || fsa.channel >= fusion::kRasterChannels) {
    throw ConfigError("pipeline.fsa.channel must name one of the raster channels");
  }
  if (vit.dim < 2 * fusion::kRasterChannels) throw ConfigError("pipeline.vit.dim must hold the fused channels");
}

ExperimentConfig::ExperimentConfig() {
  for (double s : {0.0, 1.0, 2.0, 3.0, 4.0}) noise_levels.push_back({s, s});
}

namespace {

const std::set<std::string_view> kAlignMethods = {kMethodPgc, kMethodIcp, kMethodGraph, kMethodGtNoise};
const std::set<std::string_view> kSweepMethods = {kSweepNoFusion, kSweepBaseline, kSweepPastat};

}  // namespace

void ExperimentConfig::validate() const {
  if (scenarios < 0) throw ConfigError("scenarios must be >= 0");
  scenario.validate();
  for (int c : co_visible_family) {
    if (c < 0 || c > scenario.num_objects) throw ConfigError("co_visible_family entries must lie in [0, num_objects]");
  }
  if (methods.empty()) throw ConfigError("methods must not be empty");
  for (const auto& m : methods) {
    if (!kAlignMethods.contains(m)) throw ConfigError("unknown alignment method '" + m + "'");
  }
  for (const auto& m : sweep_methods) {
    if (!kSweepMethods.contains(m)) throw ConfigError("unknown sweep method '" + m + "'");
  }
  try {
    align_noise.validate();
    for (const auto& n : noise_levels) n.validate();
    icp.validate();
    graph.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  pipeline.validate();
  eval.validate();
  if (timing_repeats < 1) throw ConfigError("timing_repeats must be >= 1");
  if (parallel < 1) throw ConfigError("parallel must be >= 1");
}

namespace {

/// Reads one JSON object, tracking consumed keys so leftovers can be
/// reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  void number(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void integer(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + " must be an integer");
      out = v->get<int>();
    }
  }
  void unsigned64(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void boolean(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }
  void string(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  void strings(const char* key, std::vector<std::string>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + " must be an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(where(key) + " must be an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  void integers(const char* key, std::vector<int>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + " must be an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer()) throw ConfigError(where(key) + " must be an array of integers");
        out.push_back(e.get<int>());
      }
    }
  }
  void numbers(const char* key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + " must be an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(where(key) + " must be an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  /// Nested object, or nullptr when absent.
  const json* object(const char* key) { return take(key); }
  [[nodiscard]] std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ConfigError("unknown key '" + (path_.empty() ? k : path_ + "." + k) + "'");
    }
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[nodiscard]] std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? std::string("config") : path_;
    return key ? "'" + (path_.empty() ? std::string(key) : path_ + "." + key) + "'" : "'" + p + "'";
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void nested(Reader& r, const char* key, F&& fn) {
  if (const json* v = r.object(key)) {
    Reader sub(*v, r.child(key));
    fn(sub);
    sub.finish();
  }
}

void read_scenario(Reader& r, ScenarioConfig& s) {
  r.integer("num_agents", s.num_agents);
  r.integer("num_objects", s.num_objects);
  r.integer("co_visible", s.co_visible);
  r.number("sensing_range", s.sensing_range);
  r.number("agent_separation", s.agent_separation);
  r.number("points_per_m2", s.points_per_m2);
  r.integer("ground_points", s.ground_points);
  r.integer("clutter_blobs", s.clutter_blobs);
  r.integer("clutter_points", s.clutter_points);
  r.number("clutter_max_height", s.clutter_max_height);
  r.number("min_object_gap", s.min_object_gap);
  r.number("yaw_jitter_deg", s.yaw_jitter_deg);
  r.boolean("occlusion", s.occlusion);
  r.number("box_noise_sigma", s.box_noise_sigma);
  r.integer("frames", s.frames);
  r.integer("max_retries", s.max_retries);
}

std::vector<GaussianPoseNoise> read_levels(const json& v, const std::string& where) {
  std::vector<GaussianPoseNoise> out;
  if (!v.is_array()) throw ConfigError("'" + where + "' must be an array of [sigma_t, sigma_r_deg] pairs");
  for (const auto& e : v) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw ConfigError("'" + where + "' must be an array of [sigma_t, sigma_r_deg] pairs");
    }
    out.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return out;
}

void read_pipeline(Reader& r, PipelineConfig& p) {
  nested(r, "grid", [&](Reader& g) {
    int width = p.grid.width, height = p.grid.height;
    double res = p.grid.resolution;
    g.integer("width", width);
    g.integer("height", height);
    g.number("resolution", res);
    if (width < 1 || height < 1 || !(res > 0.0)) throw ConfigError("'pipeline.grid' needs positive size and resolution");
    p.grid = fusion::GridSpec::centered(width, height, res);
  });
  r.number("downsample_voxel", p.downsample_voxel);
  nested(r, "oracle", [&](Reader& o) {
    o.number("inlier_sigma", p.oracle.noise.inlier_sigma);
    o.number("outlier_fraction", p.oracle.noise.outlier_fraction);
    o.number("outlier_scale", p.oracle.noise.outlier_scale);
    o.number("bias_correlation_length", p.oracle.noise.bias_correlation_length);
    o.number("bias_amplitude", p.oracle.noise.bias_amplitude);
    o.number("error_prediction_fidelity", p.oracle.error_prediction_fidelity);
    std::string norm = p.oracle.norm == pgc::ErrorNorm::kL1 ? "l1" : "l2";
    o.string("norm", norm);
    if (norm != "l1" && norm != "l2") throw ConfigError("'pipeline.oracle.norm' must be \"l1\" or \"l2\"");
    p.oracle.norm = norm == "l1" ? pgc::ErrorNorm::kL1 : pgc::ErrorNorm::kL2;
  });
  nested(r, "ransac", [&](Reader& o) {
    o.integer("max_iterations", p.ransac.max_iterations);
    o.number("inlier_threshold", p.ransac.inlier_threshold);
    o.integer("min_inliers", p.ransac.min_inliers);
    o.integer("sample_size", p.ransac.sample_size);
    o.number("confidence_stop", p.ransac.confidence_stop);
  });
  nested(r, "fsa", [&](Reader& o) {
    double max_theta = rad2deg(p.fsa.max_dtheta), step_theta = rad2deg(p.fsa.step_theta);
    o.number("max_dx", p.fsa.max_dx);
    o.number("max_dy", p.fsa.max_dy);
    o.number("step_xy", p.fsa.step_xy);
    o.number("max_dtheta_deg", max_theta);
    o.number("step_theta_deg", step_theta);
    o.integer("channel", p.fsa.channel);
    p.fsa.max_dtheta = deg2rad(max_theta);
    p.fsa.step_theta = deg2rad(step_theta);
  });
  nested(r, "vit", [&](Reader& o) {
    o.integer("dim", p.vit.dim);
    o.integer("heads", p.vit.heads);
    o.integer("layers", p.vit.layers);
    o.integer("mlp_hidden", p.vit.mlp_hidden);
    std::string te = p.vit.tokenize.variant == temporal::EncodingVariant::kAsPrinted ? "as_printed" : "classic";
    o.string("temporal_encoding", te);
    if (te != "as_printed" && te != "classic") {
      throw ConfigError("'pipeline.vit.temporal_encoding' must be \"as_printed\" or \"classic\"");
    }
    p.vit.tokenize.variant = te == "classic" ? temporal::EncodingVariant::kClassic : temporal::EncodingVariant::kAsPrinted;
    o.boolean("spatial_encoding", p.vit.tokenize.spatial_encoding);
  });
  nested(r, "decode", [&](Reader& o) {
    o.number("score_threshold", p.decode.score_threshold);
    o.number("nms_iou", p.decode.nms_iou);
    o.integer("pool_rows", p.decode.pool_rows);
    o.integer("pool_cols", p.decode.pool_cols);
  });
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Reader r(root, "");
  r.unsigned64("seed", cfg.seed);
  r.integer("scenarios", cfg.scenarios);
  nested(r, "scenario", [&](Reader& s) { read_scenario(s, cfg.scenario); });
  r.integers("co_visible_family", cfg.co_visible_family);
  r.strings("methods", cfg.methods);
  if (const json* v = r.object("align_noise")) {
    const auto lv = read_levels(json::array({*v}), "align_noise");
    cfg.align_noise = lv.front();
  }
  if (const json* v = r.object("noise_levels")) cfg.noise_levels = read_levels(*v, "noise_levels");
  r.strings("sweep_methods", cfg.sweep_methods);
  nested(r, "pipeline", [&](Reader& p) { read_pipeline(p, cfg.pipeline); });
  nested(r, "icp", [&](Reader& o) {
    o.integer("max_iterations", cfg.icp.max_iterations);
    o.number("convergence_eps", cfg.icp.convergence_eps);
    o.number("max_correspondence_dist", cfg.icp.max_correspondence_dist);
  });
  nested(r, "graph", [&](Reader& o) {
    o.number("edge_consistency_eps", cfg.graph.edge_consistency_eps);
    o.integer("min_consensus", cfg.graph.min_consensus);
  });
  nested(r, "eval", [&](Reader& o) {
    o.numbers("iou_thresholds", cfg.eval.iou_thresholds);
    o.number("score_threshold", cfg.eval.score_threshold);
  });
  r.integer("timing_repeats", cfg.timing_repeats);
  r.integer("parallel", cfg.parallel);
  std::string out = cfg.out_dir.string();
  r.string("out_dir", out);
  cfg.out_dir = out;
  r.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file_bytes(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  try {
    return parse_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  auto levels = [](const std::vector<GaussianPoseNoise>& v) {
    ojson a = ojson::array();
    for (const auto& n : v) a.push_back({n.sigma_t, n.sigma_r_deg});
    return a;
  };
  const auto& s = c.scenario;
  const auto& p = c.pipeline;
  ojson j;
  j["seed"] = c.seed;
  j["scenarios"] = c.scenarios;
  j["scenario"] = {{"num_agents", s.num_agents},
                   {"num_objects", s.num_objects},
                   {"co_visible", s.co_visible},
                   {"sensing_range", s.sensing_range},
                   {"agent_separation", s.agent_separation},
                   {"points_per_m2", s.points_per_m2},
                   {"ground_points", s.ground_points},
                   {"clutter_blobs", s.clutter_blobs},
                   {"clutter_points", s.clutter_points},
                   {"clutter_max_height", s.clutter_max_height},
                   {"min_object_gap", s.min_object_gap},
                   {"yaw_jitter_deg", s.yaw_jitter_deg},
                   {"occlusion", s.occlusion},
                   {"box_noise_sigma", s.box_noise_sigma},
                   {"frames", s.frames},
                   {"max_retries", s.max_retries}};
  j["co_visible_family"] = c.co_visible_family;
  j["methods"] = c.methods;
  j["align_noise"] = {c.align_noise.sigma_t, c.align_noise.sigma_r_deg};
  j["noise_levels"] = levels(c.noise_levels);
  j["sweep_methods"] = c.sweep_methods;
  ojson pj;
  pj["grid"] = {{"width", p.grid.width}, {"height", p.grid.height}, {"resolution", p.grid.resolution}};
  pj["downsample_voxel"] = p.downsample_voxel;
  pj["oracle"] = {{"inlier_sigma", p.oracle.noise.inlier_sigma},
                  {"outlier_fraction", p.oracle.noise.outlier_fraction},
                  {"outlier_scale", p.oracle.noise.outlier_scale},
                  {"bias_correlation_length", p.oracle.noise.bias_correlation_length},
                  {"bias_amplitude", p.oracle.noise.bias_amplitude},
                  {"error_prediction_fidelity", p.oracle.error_prediction_fidelity},
                  {"norm", p.oracle.norm == pgc::ErrorNorm::kL1 ? "l1" : "l2"}};
  pj["ransac"] = {{"max_iterations", p.ransac.max_iterations},
                  {"inlier_threshold", p.ransac.inlier_threshold},
                  {"min_inliers", p.ransac.min_inliers},
                  {"sample_size", p.ransac.sample_size},
                  {"confidence_stop", p.ransac.confidence_stop}};
  pj["fsa"] = {{"max_dx", p.fsa.max_dx},
               {"max_dy", p.fsa.max_dy},
               {"step_xy", p.fsa.step_xy},
               {"max_dtheta_deg", rad2deg(p.fsa.max_dtheta)},
               {"step_theta_deg", rad2deg(p.fsa.step_theta)},
               {"channel", p.fsa.channel}};
  pj["vit"] = {{"dim", p.vit.dim},
               {"heads", p.vit.heads},
               {"layers", p.vit.layers},
               {"mlp_hidden", p.vit.mlp_hidden},
               {"temporal_encoding",
                p.vit.tokenize.variant == temporal::EncodingVariant::kAsPrinted ? "as_printed" : "classic"},
               {"spatial_encoding", p.vit.tokenize.spatial_encoding}};
  pj["decode"] = {{"score_threshold", p.decode.score_threshold},
                  {"nms_iou", p.decode.nms_iou},
                  {"pool_rows", p.decode.pool_rows},
                  {"pool_cols", p.decode.pool_cols}};
  j["pipeline"] = pj;
  j["icp"] = {{"max_iterations", c.icp.max_iterations},
              {"convergence_eps", c.icp.convergence_eps},
              {"max_correspondence_dist", c.icp.max_correspondence_dist}};
  j["graph"] = {{"edge_consistency_eps", c.graph.edge_consistency_eps}, {"min_consensus", c.graph.min_consensus}};
  j["eval"] = {{"iou_thresholds", c.eval.iou_thresholds}, {"score_threshold", c.eval.score_threshold}};
  j["timing_repeats"] = c.timing_repeats;
  j["parallel"] = c.parallel;
  j["out_dir"] = c.out_dir.string();
  return j.dump(2) + "\n";
}

}  // namespace coopalign::harness
