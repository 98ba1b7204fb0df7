#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dtg/errors.hpp"
#include "dtg/geometry.hpp"
#include "dtg/prediction.hpp"
#include "dtg/rng.hpp"

namespace dtg {

struct GtObject {
  Box box;  // image space
  int class_id = 0;
};

struct SceneNoise {
  double box_jitter_sigma = 4.0;   // pixels, on every corner of a duplicate
  double score_noise_sigma = 0.1;  // added to the IoU-derived score
  double fp_rate = 0.0;            // false positives per duplicated candidate
};

// Deterministic synthetic scene: ground truth plus paired teacher/student
// predictions in independently augmented views. The teacher score model is
// clamp(iou_to_gt + gaussian, floor, 1-floor), so scores track localization
// quality the way a trained detector's do.
struct SceneSpec {
  std::uint64_t seed = 0;
  int num_objects = 3;
  int num_classes = 3;
  double view_width = 640.0;
  double view_height = 640.0;
  SceneNoise noise;
  int dups_per_object = 8;
  int background_samples = 16;
  Stage stage = Stage::kRcnn;
  int fpn_levels = 3;  // rpn only
  double base_anchor_size = 32.0;
};

struct Scene {
  std::vector<GtObject> ground_truth;  // image space
  DensePrediction teacher;
  DensePrediction student;
};

namespace detail {

inline constexpr double kScoreFloor = 1e-7;

inline double clamp_score(double s) { return std::clamp(s, kScoreFloor, 1.0 - kScoreFloor); }

inline Box jitter_box(const Box& b, double sigma, Rng& rng) {
  if (sigma == 0.0) return b;
  Box j{b.x1 + rng.normal(sigma), b.y1 + rng.normal(sigma), b.x2 + rng.normal(sigma),
        b.y2 + rng.normal(sigma)};
  if (j.x1 > j.x2) std::swap(j.x1, j.x2);
  if (j.y1 > j.y2) std::swap(j.y1, j.y2);
  // keep a sliver of area so IoU and delta encoding stay defined
  if (j.width() < 1.0) j.x2 = j.x1 + 1.0;
  if (j.height() < 1.0) j.y2 = j.y1 + 1.0;
  return j;
}

inline double max_iou_to_gt(const Box& b, const std::vector<GtObject>& gt, int* argmax = nullptr) {
  double best = 0.0;
  int best_idx = -1;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double ov = iou(b, gt[i].box);
    if (ov > best) {
      best = ov;
      best_idx = static_cast<int>(i);
    }
  }
  if (argmax) *argmax = best_idx;
  return best;
}

// Class probability vector for an R-CNN sample: `score` at the target class,
// a small constant on the other foreground classes, the remainder on the
// trailing background entry.
inline std::vector<double> rcnn_probs(int num_classes, int target, double score) {
  std::vector<double> probs(num_classes + 1, 0.01);
  if (target >= 0) probs[target] = score;
  probs[num_classes] = clamp_score(1.0 - (target >= 0 ? score : 0.0));
  return probs;
}

inline AugTransform random_view(double image_w, double image_h, Rng& rng) {
  AugTransform t;
  t.hflip = rng.coin();
  t.scale = rng.uniform(0.8, 1.2);
  t.dx = rng.uniform(-20.0, 20.0);
  t.dy = rng.uniform(-20.0, 20.0);
  t.view_width = t.scale * image_w;
  t.view_height = t.scale * image_h;
  return t;
}

}  // namespace detail

// Places GT boxes with pairwise IoU below 0.3, rejecting after bounded tries;
// a spec that cannot be packed is an error.
inline std::vector<GtObject> place_ground_truth(const SceneSpec& spec, Rng& rng) {
  std::vector<GtObject> gt;
  const double min_side = 40.0;
  const double max_side = std::max(min_side + 1.0, std::min(spec.view_width, spec.view_height) / 3.0);
  for (int i = 0; i < spec.num_objects; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const double w = rng.uniform(min_side, max_side);
      const double h = rng.uniform(min_side, max_side);
      if (w > spec.view_width || h > spec.view_height) continue;
      const double x1 = rng.uniform(0.0, spec.view_width - w);
      const double y1 = rng.uniform(0.0, spec.view_height - h);
      const Box b{x1, y1, x1 + w, y1 + h};
      if (detail::max_iou_to_gt(b, gt) < 0.3) {
        gt.push_back(GtObject{b, rng.uniform_int(0, spec.num_classes - 1)});
        placed = true;
      }
    }
    if (!placed)
      throw ValidationError("cannot place " + std::to_string(spec.num_objects) +
                            " objects in a " + std::to_string(spec.view_width) + "x" +
                            std::to_string(spec.view_height) + " view");
  }
  return gt;
}

inline Scene generate_scene(const SceneSpec& spec) {
  if (spec.num_objects < 0 || spec.num_classes < 1) throw ValidationError("invalid scene spec");
  if (spec.noise.fp_rate < 0.0 || spec.noise.fp_rate > 1.0)
    throw ValidationError("fp-rate must lie in [0,1]");
  if (spec.noise.box_jitter_sigma < 0.0 || spec.noise.score_noise_sigma < 0.0)
    throw ValidationError("noise sigmas must be nonnegative");

  Rng rng(spec.seed);
  Scene scene;
  scene.ground_truth = place_ground_truth(spec, rng);
  const std::vector<GtObject>& gt = scene.ground_truth;

  const AugTransform teacher_view = detail::random_view(spec.view_width, spec.view_height, rng);
  const AugTransform student_view = detail::random_view(spec.view_width, spec.view_height, rng);
  const std::string id = "scene-" + std::to_string(spec.seed);

  scene.teacher.image_id = id;
  scene.teacher.stage = spec.stage;
  scene.teacher.space = teacher_view;
  scene.student.image_id = id;
  scene.student.stage = spec.stage;
  scene.student.space = student_view;

  std::vector<GtObject> gt_teacher, gt_student;
  for (const GtObject& g : gt) {
    gt_teacher.push_back(GtObject{apply_transform(g.box, teacher_view), g.class_id});
    gt_student.push_back(GtObject{apply_transform(g.box, student_view), g.class_id});
  }

  const double jitter = spec.noise.box_jitter_sigma;
  const double score_noise = spec.noise.score_noise_sigma;

  if (spec.stage == Stage::kRcnn) {
    // Teacher proposals: duplicates around each object, clear-background
    // boxes away from every object, then optional false positives.
    struct Blueprint {
      Box proposal;  // teacher space
      int gt_index = -1;
      bool forced_fp = false;
      double fp_score = 0.0;
    };
    std::vector<Blueprint> plan;
    for (std::size_t gi = 0; gi < gt_teacher.size(); ++gi) {
      for (int d = 0; d < spec.dups_per_object; ++d)
        plan.push_back(Blueprint{detail::jitter_box(gt_teacher[gi].box, jitter, rng),
                                 static_cast<int>(gi), false, 0.0});
    }
    for (int b = 0; b < spec.background_samples; ++b) {
      Box box;
      for (int attempt = 0; attempt < 200; ++attempt) {
        const double w = rng.uniform(20.0, spec.view_width / 4.0);
        const double h = rng.uniform(20.0, spec.view_height / 4.0);
        const double x1 = rng.uniform(0.0, std::max(1.0, spec.view_width - w));
        const double y1 = rng.uniform(0.0, std::max(1.0, spec.view_height - h));
        box = apply_transform(Box{x1, y1, x1 + w, y1 + h}, teacher_view);
        if (detail::max_iou_to_gt(box, gt_teacher) < 0.35) break;
      }
      plan.push_back(Blueprint{box, -1, false, 0.0});
    }
    const int num_fp =
        static_cast<int>(std::lround(spec.noise.fp_rate * spec.num_objects * spec.dups_per_object));
    for (int f = 0; f < num_fp && !gt_teacher.empty(); ++f) {
      const int gi = rng.uniform_int(0, static_cast<int>(gt_teacher.size()) - 1);
      const Box& g = gt_teacher[gi].box;
      // shifted copy: overlaps the object partially
      const double fx = (0.25 + 0.35 * rng.uniform()) * g.width() * (rng.coin() ? 1.0 : -1.0);
      const double fy = (0.25 + 0.35 * rng.uniform()) * g.height() * (rng.coin() ? 1.0 : -1.0);
      plan.push_back(Blueprint{Box{g.x1 + fx, g.y1 + fy, g.x2 + fx, g.y2 + fy}, gi, true,
                               rng.uniform(0.5, 0.95)});
    }

    for (std::size_t i = 0; i < plan.size(); ++i) {
      const Blueprint& bp = plan[i];
      Sample ts;
      ts.sample_id = static_cast<int>(i);
      ts.sample_box = bp.proposal;
      ts.regressed_box = bp.gt_index >= 0 && !bp.forced_fp
                             ? detail::jitter_box(gt_teacher[bp.gt_index].box, 0.5 * jitter, rng)
                             : bp.proposal;
      int nearest = -1;
      const double quality = detail::max_iou_to_gt(ts.regressed_box, gt_teacher, &nearest);
      const int cls = nearest >= 0 ? gt_teacher[nearest].class_id : 0;
      double score = bp.forced_fp ? bp.fp_score
                                  : detail::clamp_score(quality + rng.normal(score_noise));
      ts.class_probs = detail::rcnn_probs(spec.num_classes, nearest >= 0 ? cls : -1, score);
      scene.teacher.samples.push_back(std::move(ts));

      // The student sees the copied proposal in its own view and makes its
      // own (noisy) predictions for it.
      Sample ss;
      ss.sample_id = static_cast<int>(i);
      ss.sample_box = cross_space(bp.proposal, teacher_view, student_view);
      ss.regressed_box = bp.gt_index >= 0
                             ? detail::jitter_box(gt_student[bp.gt_index].box, 0.5 * jitter, rng)
                             : ss.sample_box;
      int s_nearest = -1;
      const double s_quality = detail::max_iou_to_gt(ss.regressed_box, gt_student, &s_nearest);
      const int s_cls = s_nearest >= 0 ? gt_student[s_nearest].class_id : 0;
      const double s_score = detail::clamp_score(s_quality + rng.normal(score_noise));
      ss.class_probs = detail::rcnn_probs(spec.num_classes, s_nearest >= 0 ? s_cls : -1, s_score);
      scene.student.samples.push_back(std::move(ss));
    }
  } else {
    // RPN: one anchor grid per pyramid level in each view; objectness follows
    // the same IoU-derived score model.
    auto build_anchors = [&](const AugTransform& view) {
      std::vector<Box> anchors;
      for (int level = 0; level < spec.fpn_levels; ++level) {
        const double size = spec.base_anchor_size * std::pow(2.0, level);
        const double stride = size;
        for (double cy = 0.5 * stride; cy + 0.5 * size <= view.view_height + 1e-9; cy += stride) {
          for (double cx = 0.5 * stride; cx + 0.5 * size <= view.view_width + 1e-9; cx += stride) {
            anchors.push_back(Box{cx - 0.5 * size, cy - 0.5 * size, cx + 0.5 * size, cy + 0.5 * size});
          }
        }
      }
      return anchors;
    };
    auto fill = [&](DensePrediction& pred, const std::vector<GtObject>& gt_view) {
      const std::vector<Box> anchors = build_anchors(pred.space);
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        Sample s;
        s.sample_id = static_cast<int>(i);
        s.sample_box = anchors[i];
        int nearest = -1;
        const double anchor_iou = detail::max_iou_to_gt(anchors[i], gt_view, &nearest);
        s.regressed_box = (nearest >= 0 && anchor_iou > 0.3)
                              ? detail::jitter_box(gt_view[nearest].box, 0.5 * jitter, rng)
                              : anchors[i];
        const double quality = detail::max_iou_to_gt(s.regressed_box, gt_view);
        s.class_probs = {detail::clamp_score(quality + rng.normal(score_noise))};
        pred.samples.push_back(std::move(s));
      }
    };
    fill(scene.teacher, gt_teacher);
    fill(scene.student, gt_student);
  }
  return scene;
}

// The misleading-positive scenario: a poorly localized proposal overlaps the
// pseudo box at IoU 0.6 so the sparse baseline marks it positive, but the
// teacher scores it 0.3 (below tau 0.45) so inverse clustering marks it
// background. Identity views, one object, one foreground class.
inline Scene make_misleading_positive_scene() {
  Scene scene;
  const AugTransform identity{false, 1.0, 0.0, 0.0, 200.0, 200.0};
  const Box object{50.0, 50.0, 150.0, 150.0};
  scene.ground_truth = {GtObject{object, 0}};

  // IoU with `object` = 10000 / (100 * 500/3) = 0.6
  const Box poorly_localized{50.0, 200.0 - 500.0 / 3.0, 150.0, 200.0};
  const Box far_away{0.0, 0.0, 20.0, 20.0};

  auto make = [&](double good, double bad, double far) {
    DensePrediction pred;
    pred.stage = Stage::kRcnn;
    pred.space = identity;
    pred.image_id = "fig-misleading";
    pred.samples = {
        Sample{0, object, {good, detail::clamp_score(1.0 - good)}, object},
        Sample{1, poorly_localized, {bad, detail::clamp_score(1.0 - bad)}, poorly_localized},
        Sample{2, far_away, {far, detail::clamp_score(1.0 - far)}, far_away},
    };
    return pred;
  };
  scene.teacher = make(0.95, 0.3, 0.05);
  scene.student = make(0.9, 0.55, 0.1);
  return scene;
}

// The ambiguous-negative scenario: a proposal covering part of the object has
// IoU 0.45 with the pseudo box so the baseline calls it background, but its
// regressed box joins the reserved cluster (teacher score 0.6 > tau), so
// inverse clustering supervises it as positive.
inline Scene make_ambiguous_negative_scene() {
  Scene scene;
  const AugTransform identity{false, 1.0, 0.0, 0.0, 200.0, 200.0};
  const Box object{50.0, 50.0, 150.0, 150.0};
  scene.ground_truth = {GtObject{object, 0}};

  const Box partial{50.0, 50.0, 150.0, 95.0};       // IoU 0.45 with the object
  const Box refined{50.0, 50.0, 150.0, 140.0};      // IoU 0.9 with the object
  const Box far_away{0.0, 0.0, 20.0, 20.0};

  auto make = [&](double good, double part, double far) {
    DensePrediction pred;
    pred.stage = Stage::kRcnn;
    pred.space = identity;
    pred.image_id = "fig-ambiguous";
    pred.samples = {
        Sample{0, object, {good, detail::clamp_score(1.0 - good)}, object},
        Sample{1, partial, {part, detail::clamp_score(1.0 - part)}, refined},
        Sample{2, far_away, {far, detail::clamp_score(1.0 - far)}, far_away},
    };
    return pred;
  };
  scene.teacher = make(0.95, 0.6, 0.05);
  scene.student = make(0.9, 0.5, 0.1);
  return scene;
}

}  // namespace dtg
