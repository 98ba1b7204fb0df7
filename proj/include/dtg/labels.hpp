#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dtg/correspondence.hpp"
#include "dtg/errors.hpp"
#include "dtg/geometry.hpp"
#include "dtg/nms.hpp"

namespace dtg {

enum class LabelKind { kPositive, kBackground, kIgnore };

// Supervision for one student sample. Positive labels carry the category,
// the regression target in student space, and the originating cluster (or
// pseudo-box index under the sparse baseline).
struct Label {
  LabelKind kind = LabelKind::kIgnore;
  int class_id = -1;
  Box target;
  int cluster_id = -1;
};

using TrainingLabelSet = std::vector<Label>;

// Normalized box offsets relative to the sample's own anchor/proposal,
// center/size form. decode(encode(s, t), s) == t up to roundoff.
struct RegressionDelta {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;
};

inline RegressionDelta encode_delta(const Box& sample, const Box& target) {
  const double sw = sample.width();
  const double sh = sample.height();
  if (!(sw > 0.0 && sh > 0.0)) throw ValidationError("sample box must have positive size");
  const double tw = target.width();
  const double th = target.height();
  if (!(tw > 0.0 && th > 0.0)) throw ValidationError("regression target must have positive size");
  return RegressionDelta{(target.cx() - sample.cx()) / sw, (target.cy() - sample.cy()) / sh,
                         std::log(tw / sw), std::log(th / sh)};
}

inline Box decode_delta(const RegressionDelta& d, const Box& sample) {
  const double sw = sample.width();
  const double sh = sample.height();
  if (!(sw > 0.0 && sh > 0.0)) throw ValidationError("sample box must have positive size");
  const double cx = sample.cx() + d.dx * sw;
  const double cy = sample.cy() + d.dy * sh;
  const double w = sw * std::exp(d.dw);
  const double h = sh * std::exp(d.dh);
  return Box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

// Which teacher box supervises a cluster member's regression: the finally
// reserved box (default) or each member's own box (ablation variant).
enum class RegressionTargetMode { kReservedBox, kAllBoxes };

// Inverse NMS clustering. Reads the teacher's cluster structure backwards:
// every member's matched student sample inherits the cluster category and the
// reserved box (mapped into student space) as regression target; students
// matched to below-tau teacher samples become background; everything else is
// ignored. When one student sample is reachable from clusters of different
// categories, the cluster with the higher reserved score wins.
inline TrainingLabelSet derive_labels(const ClusterSet& cs, const CorrespondenceMap& cm,
                                      const AugTransform& teacher_space,
                                      const AugTransform& student_space, int num_student,
                                      RegressionTargetMode mode = RegressionTargetMode::kReservedBox) {
  TrainingLabelSet labels(num_student);

  int max_teacher = -1;
  for (const Candidate& c : cs.candidates) max_teacher = std::max(max_teacher, c.index);
  for (int t : cs.inactive) max_teacher = std::max(max_teacher, t);
  const std::vector<int> to_student = cm.teacher_lookup(max_teacher + 1);
  auto student_of = [&](int t) {
    const int s = (t >= 0 && t <= max_teacher) ? to_student[t] : -2;
    if (s == -2)
      throw InvariantError("teacher sample " + std::to_string(t) +
                           " is not covered by the correspondence map");
    return s;  // -1 when the teacher sample has no student partner
  };

  std::vector<double> claim_score(num_student, -1.0);
  for (std::size_t j = 0; j < cs.clusters.size(); ++j) {
    const Cluster& cl = cs.clusters[j];
    const Candidate& reserved = cs.candidates[cl.reserved];
    for (int m : cl.members) {
      const Candidate& member = cs.candidates[m];
      const int s = student_of(member.index);
      if (s < 0) continue;  // unmatched teacher: nothing to supervise
      if (labels[s].kind == LabelKind::kPositive && claim_score[s] >= reserved.score) continue;
      const Box& target_teacher = mode == RegressionTargetMode::kReservedBox ? reserved.box : member.box;
      labels[s] = Label{LabelKind::kPositive, cl.category,
                        cross_space(target_teacher, teacher_space, student_space),
                        static_cast<int>(j)};
      claim_score[s] = reserved.score;
    }
  }
  for (int t : cs.inactive) {
    const int s = student_of(t);
    if (s >= 0) labels[s] = Label{LabelKind::kBackground, -1, Box{}, -1};
  }
  return labels;
}

// A post-NMS, post-thresholding teacher detection acting as synthetic ground
// truth in the sparse-to-dense baseline.
struct PseudoLabel {
  Box box;
  int class_id = 0;
  double score = 1.0;
};

// Hand-crafted IoU assignment of the sparse-to-dense baseline: drop pseudo
// boxes below score_thresh, then label each student sample by its max-IoU
// surviving pseudo box (>= pos_iou positive, < neg_iou background, otherwise
// ignore). cluster_id of a positive is the pseudo box index.
inline TrainingLabelSet sparse_to_dense_assign(std::span<const PseudoLabel> pseudo_labels,
                                               double score_thresh,
                                               std::span<const Box> student_samples, double pos_iou,
                                               double neg_iou) {
  if (pos_iou < neg_iou) throw ValidationError("pos_iou must be >= neg_iou");
  std::vector<int> kept;
  for (std::size_t i = 0; i < pseudo_labels.size(); ++i)
    if (pseudo_labels[i].score >= score_thresh) kept.push_back(static_cast<int>(i));

  TrainingLabelSet labels(student_samples.size());
  for (std::size_t s = 0; s < student_samples.size(); ++s) {
    double best = 0.0;
    int best_idx = -1;
    for (int i : kept) {
      const double ov = iou(student_samples[s], pseudo_labels[i].box);
      if (ov > best) {
        best = ov;
        best_idx = i;
      }
    }
    if (best_idx >= 0 && best >= pos_iou) {
      labels[s] = Label{LabelKind::kPositive, pseudo_labels[best_idx].class_id,
                        pseudo_labels[best_idx].box, best_idx};
    } else if (best < neg_iou) {
      labels[s] = Label{LabelKind::kBackground, -1, Box{}, -1};
    }  // else: in the ignore band
  }
  return labels;
}

}  // namespace dtg
