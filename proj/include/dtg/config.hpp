#pragma once

#include <cstdint>
#include <string>

#include "dtg/correspondence.hpp"
#include "dtg/errors.hpp"
#include "dtg/labels.hpp"
#include "dtg/prediction.hpp"

namespace dtg {

enum class Paradigm { kDenseToDense, kSparseToDense };

inline const char* paradigm_name(Paradigm p) {
  return p == Paradigm::kDenseToDense ? "dtg" : "baseline";
}

// All knobs of the supervision engine with their working defaults: tau 0.9
// (RPN) / 0.45 (R-CNN), NMS IoU 0.7 / 0.5, T=1, beta=3, alpha=4, focal
// gamma=2 alpha_f=0.25.
struct RunConfig {
  double tau_rpn = 0.9;
  double tau_rcnn = 0.45;
  double nms_iou_rpn = 0.7;
  double nms_iou_rcnn = 0.5;
  double temperature = 1.0;
  double beta = 3.0;
  double alpha = 4.0;
  double gamma = 2.0;
  double alpha_f = 0.25;
  double smooth_l1_beta = 1.0;
  RegressionTargetMode regression_target = RegressionTargetMode::kReservedBox;
  Paradigm paradigm = Paradigm::kDenseToDense;
  double baseline_score_thresh = 0.9;
  double baseline_pos_iou = 0.5;
  double baseline_neg_iou = 0.5;
  int max_active = 0;  // 0 = unlimited
  FpnConfig fpn;
  std::uint64_t seed = 0;

  double tau(Stage stage) const { return stage == Stage::kRpn ? tau_rpn : tau_rcnn; }
  double nms_iou(Stage stage) const { return stage == Stage::kRpn ? nms_iou_rpn : nms_iou_rcnn; }

  void validate() const {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(tau_rpn) || !in_unit(tau_rcnn)) throw ValidationError("tau must lie in (0,1)");
    if (!in_unit(nms_iou_rpn) || !in_unit(nms_iou_rcnn))
      throw ValidationError("nms-iou must lie in (0,1)");
    if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
    if (!(smooth_l1_beta > 0.0)) throw ValidationError("smooth-l1 beta must be positive");
    if (gamma < 0.0) throw ValidationError("gamma must be nonnegative");
    if (alpha_f < 0.0 || alpha_f > 1.0) throw ValidationError("alpha-f must lie in [0,1]");
    if (!in_unit(baseline_score_thresh))
      throw ValidationError("baseline score threshold must lie in (0,1)");
    if (baseline_pos_iou < baseline_neg_iou)
      throw ValidationError("baseline pos-iou must be >= neg-iou");
    if (max_active < 0) throw ValidationError("max-active must be nonnegative");
    if (fpn.num_levels < 1) throw ValidationError("fpn levels must be >= 1");
    if (!(fpn.base_anchor_size > 0.0)) throw ValidationError("fpn base anchor size must be positive");
  }
};

}  // namespace dtg
