#pragma once

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtg/config.hpp"
#include "dtg/errors.hpp"
#include "dtg/labels.hpp"
#include "dtg/losses.hpp"
#include "dtg/prediction.hpp"
#include "dtg/scene.hpp"

namespace dtg {

inline constexpr int kSchemaVersion = 1;

using json = nlohmann::json;

namespace io_detail {

// Inputs that feed training are validated fail-fast: any unknown or missing
// key aborts the run instead of silently skipping an image.
inline void expect_keys(const json& obj, std::initializer_list<const char*> keys,
                        const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ValidationError(where + ": unknown field '" + key + "'");
  }
  for (const char* key : keys) {
    if (!obj.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
  }
}

inline double get_finite(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(where + ": value is not finite");
  return d;
}

inline void check_schema_version(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
    throw ValidationError(where + ": unsupported schema_version");
}

}  // namespace io_detail

inline json box_to_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

inline Box box_from_json(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4)
    throw ValidationError(where + ": a box is an array of 4 numbers");
  Box b{io_detail::get_finite(v[0], where), io_detail::get_finite(v[1], where),
        io_detail::get_finite(v[2], where), io_detail::get_finite(v[3], where)};
  if (!b.valid()) throw ValidationError(where + ": box corners are inverted");
  return b;
}

inline json transform_to_json(const AugTransform& t) {
  return json{{"hflip", t.hflip},         {"scale", t.scale},
              {"dx", t.dx},               {"dy", t.dy},
              {"view_width", t.view_width}, {"view_height", t.view_height}};
}

inline AugTransform transform_from_json(const json& v, const std::string& where) {
  io_detail::expect_keys(v, {"hflip", "scale", "dx", "dy", "view_width", "view_height"}, where);
  if (!v["hflip"].is_boolean()) throw ValidationError(where + ": hflip must be a boolean");
  AugTransform t;
  t.hflip = v["hflip"].get<bool>();
  t.scale = io_detail::get_finite(v["scale"], where + ".scale");
  t.dx = io_detail::get_finite(v["dx"], where + ".dx");
  t.dy = io_detail::get_finite(v["dy"], where + ".dy");
  t.view_width = io_detail::get_finite(v["view_width"], where + ".view_width");
  t.view_height = io_detail::get_finite(v["view_height"], where + ".view_height");
  if (!(t.scale > 0.0)) throw ValidationError(where + ": scale must be positive");
  if (!(t.view_width > 0.0) || !(t.view_height > 0.0))
    throw ValidationError(where + ": view size must be positive");
  return t;
}

inline json prediction_to_json(const DensePrediction& pred) {
  json samples = json::array();
  for (const Sample& s : pred.samples) {
    samples.push_back(json{{"sample_id", s.sample_id},
                           {"sample_box", box_to_json(s.sample_box)},
                           {"class_probs", s.class_probs},
                           {"regressed_box", box_to_json(s.regressed_box)}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"image_id", pred.image_id},
              {"stage", stage_name(pred.stage)},
              {"space", transform_to_json(pred.space)},
              {"samples", std::move(samples)}};
}

inline DensePrediction prediction_from_json(const json& v, const std::string& where) {
  io_detail::expect_keys(v, {"schema_version", "image_id", "stage", "space", "samples"}, where);
  io_detail::check_schema_version(v["schema_version"], where);
  DensePrediction pred;
  if (!v["image_id"].is_string()) throw ValidationError(where + ": image_id must be a string");
  pred.image_id = v["image_id"].get<std::string>();
  const std::string stage = v["stage"].is_string() ? v["stage"].get<std::string>() : "";
  if (stage == "rpn") {
    pred.stage = Stage::kRpn;
  } else if (stage == "rcnn") {
    pred.stage = Stage::kRcnn;
  } else {
    throw ValidationError(where + ": stage must be 'rpn' or 'rcnn'");
  }
  pred.space = transform_from_json(v["space"], where + ".space");
  if (!v["samples"].is_array()) throw ValidationError(where + ": samples must be an array");

  std::set<int> seen_ids;
  std::size_t num_probs = 0;
  for (std::size_t i = 0; i < v["samples"].size(); ++i) {
    const std::string swhere = where + ".samples[" + std::to_string(i) + "]";
    const json& sv = v["samples"][i];
    io_detail::expect_keys(sv, {"sample_id", "sample_box", "class_probs", "regressed_box"}, swhere);
    Sample s;
    if (!sv["sample_id"].is_number_integer())
      throw ValidationError(swhere + ": sample_id must be an integer");
    s.sample_id = sv["sample_id"].get<int>();
    if (!seen_ids.insert(s.sample_id).second)
      throw ValidationError(swhere + ": duplicate sample_id " + std::to_string(s.sample_id));
    s.sample_box = box_from_json(sv["sample_box"], swhere + ".sample_box");
    s.regressed_box = box_from_json(sv["regressed_box"], swhere + ".regressed_box");
    if (!sv["class_probs"].is_array() || sv["class_probs"].empty())
      throw ValidationError(swhere + ": class_probs must be a nonempty array");
    for (const json& pv : sv["class_probs"]) {
      const double p = io_detail::get_finite(pv, swhere + ".class_probs");
      if (p < 0.0 || p > 1.0)
        throw ValidationError(swhere + ": class probabilities must lie in [0,1]");
      s.class_probs.push_back(p);
    }
    if (pred.stage == Stage::kRpn && s.class_probs.size() != 1)
      throw ValidationError(swhere + ": rpn samples carry a single objectness entry");
    if (pred.stage == Stage::kRcnn && s.class_probs.size() < 2)
      throw ValidationError(swhere + ": rcnn samples need foreground plus background entries");
    if (i == 0) {
      num_probs = s.class_probs.size();
    } else if (s.class_probs.size() != num_probs) {
      throw ValidationError(swhere + ": inconsistent class_probs length");
    }
    pred.samples.push_back(std::move(s));
  }
  return pred;
}

// Prediction files are JSON lines, one image per line.
inline std::vector<DensePrediction> read_prediction_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open prediction file: " + path);
  std::vector<DensePrediction> out;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> image_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json v;
    try {
      v = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(prediction_from_json(v, path + ":" + std::to_string(line_no)));
    if (!image_ids.insert(out.back().image_id).second)
      throw ValidationError(path + ": duplicate image_id '" + out.back().image_id + "'");
  }
  return out;
}

inline void write_prediction_file(const std::string& path,
                                  const std::vector<DensePrediction>& preds) {
  std::ofstream outf(path);
  if (!outf) throw ValidationError("cannot write prediction file: " + path);
  for (const DensePrediction& p : preds) outf << prediction_to_json(p).dump() << "\n";
}

inline json ground_truth_to_json(const std::string& image_id, const std::vector<GtObject>& objects) {
  json objs = json::array();
  for (const GtObject& o : objects)
    objs.push_back(json{{"box", box_to_json(o.box)}, {"class", o.class_id}});
  return json{{"image_id", image_id}, {"objects", std::move(objs)}};
}

inline json ground_truth_file_to_json(const std::vector<json>& images) {
  return json{{"schema_version", kSchemaVersion}, {"images", images}};
}

inline json label_to_json(const Label& label, int sample_id) {
  switch (label.kind) {
    case LabelKind::kPositive:
      return json{{"sample_id", sample_id},
                  {"kind", "positive"},
                  {"class", label.class_id},
                  {"cluster", label.cluster_id},
                  {"target_box", box_to_json(label.target)}};
    case LabelKind::kBackground:
      return json{{"sample_id", sample_id}, {"kind", "background"}};
    case LabelKind::kIgnore:
      return json{{"sample_id", sample_id}, {"kind", "ignore"}};
  }
  throw InvariantError("unreachable label kind");
}

inline json loss_report_to_json(const LossReport& report) {
  json grad_scores = json::array();
  for (const std::vector<double>& g : report.grad_student_scores) grad_scores.push_back(g);
  json grad_deltas = json::array();
  for (const std::array<double, 4>& g : report.grad_student_deltas)
    grad_deltas.push_back(json::array({g[0], g[1], g[2], g[3]}));
  return json{{"l_cls", report.l_cls},
              {"l_reg", report.l_reg},
              {"l_rm", report.l_rm},
              {"l_unlabeled", report.l_unlabeled},
              {"l_total", report.l_total},
              {"grad_scores", std::move(grad_scores)},
              {"grad_deltas", std::move(grad_deltas)}};
}

inline json run_config_to_json(const RunConfig& cfg) {
  return json{{"tau_rpn", cfg.tau_rpn},
              {"tau_rcnn", cfg.tau_rcnn},
              {"nms_iou_rpn", cfg.nms_iou_rpn},
              {"nms_iou_rcnn", cfg.nms_iou_rcnn},
              {"temperature", cfg.temperature},
              {"beta", cfg.beta},
              {"alpha", cfg.alpha},
              {"gamma", cfg.gamma},
              {"alpha_f", cfg.alpha_f},
              {"smooth_l1_beta", cfg.smooth_l1_beta},
              {"regression_target",
               cfg.regression_target == RegressionTargetMode::kReservedBox ? "reserved" : "all"},
              {"paradigm", paradigm_name(cfg.paradigm)},
              {"baseline_score_thresh", cfg.baseline_score_thresh},
              {"baseline_pos_iou", cfg.baseline_pos_iou},
              {"baseline_neg_iou", cfg.baseline_neg_iou},
              {"max_active", cfg.max_active},
              {"fpn_levels", cfg.fpn.num_levels},
              {"fpn_base_anchor", cfg.fpn.base_anchor_size},
              {"seed", cfg.seed}};
}

}  // namespace dtg
