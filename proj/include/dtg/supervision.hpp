#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "dtg/config.hpp"
#include "dtg/correspondence.hpp"
#include "dtg/errors.hpp"
#include "dtg/labels.hpp"
#include "dtg/losses.hpp"
#include "dtg/nms.hpp"
#include "dtg/prediction.hpp"

namespace dtg {

// Everything derived for one image: the teacher's cluster structure, the
// sample correspondence, the student labels, and the losses with gradients.
struct ImageSupervision {
  ClusterSet clusters;
  CorrespondenceMap correspondence;
  TrainingLabelSet labels;
  LossReport losses;
};

namespace detail {

// Aggregation of the per-cluster means: classification groups are the NMS
// clusters plus one group holding the background-labeled samples; regression
// groups are the clusters alone. Each loss is the mean over its nonempty
// groups, matching the per-cluster normalization of the cluster losses.
inline LossReport compute_losses(const DensePrediction& student, const TrainingLabelSet& labels,
                                 const ClusterSet& cs, const CorrespondenceMap& cm,
                                 const RunConfig& cfg) {
  const int num_student = static_cast<int>(student.samples.size());
  const bool class_aware = student.stage == Stage::kRcnn;

  LossReport report;
  report.grad_student_scores.resize(num_student);
  for (int s = 0; s < num_student; ++s)
    report.grad_student_scores[s].assign(student.samples[s].class_probs.size(), 0.0);
  report.grad_student_deltas.assign(num_student, std::array<double, 4>{});

  // Group positive samples by their label's cluster id; collect backgrounds.
  std::vector<std::vector<int>> groups;
  std::vector<int> group_of_cluster;
  std::vector<int> background;
  {
    int max_cluster = -1;
    for (const Label& l : labels)
      if (l.kind == LabelKind::kPositive) max_cluster = std::max(max_cluster, l.cluster_id);
    group_of_cluster.assign(max_cluster + 1, -1);
    for (int s = 0; s < num_student; ++s) {
      const Label& l = labels[s];
      if (l.kind == LabelKind::kBackground) {
        background.push_back(s);
      } else if (l.kind == LabelKind::kPositive) {
        if (group_of_cluster[l.cluster_id] < 0) {
          group_of_cluster[l.cluster_id] = static_cast<int>(groups.size());
          groups.emplace_back();
        }
        groups[group_of_cluster[l.cluster_id]].push_back(s);
      }
    }
  }

  const int num_cls_groups = static_cast<int>(groups.size()) + (background.empty() ? 0 : 1);
  const int num_reg_groups = static_cast<int>(groups.size());

  auto fg_probs = [&](int s) {
    const std::vector<double>& probs = student.samples[s].class_probs;
    const std::size_t fg = class_aware ? probs.size() - 1 : probs.size();
    return std::span<const double>(probs.data(), fg);
  };

  // Classification and regression, per group then across groups.
  for (const std::vector<int>& group : groups) {
    double cls_sum = 0.0;
    double reg_sum = 0.0;
    for (int s : group) {
      const Label& l = labels[s];
      const FocalLoss fl = focal_loss(fg_probs(s), l.class_id, cfg.gamma, cfg.alpha_f);
      cls_sum += fl.value;
      const double cls_coeff = 1.0 / (num_cls_groups * static_cast<double>(group.size()));
      for (std::size_t c = 0; c < fl.grad.size(); ++c)
        report.grad_student_scores[s][c] += cls_coeff * fl.grad[c];

      const Sample& sample = student.samples[s];
      const RegressionDelta pred = encode_delta(sample.sample_box, sample.regressed_box);
      const RegressionDelta target = encode_delta(sample.sample_box, l.target);
      const SmoothL1Loss sl = smooth_l1(pred, target, cfg.smooth_l1_beta);
      reg_sum += sl.value;
      const double reg_coeff = 1.0 / (num_reg_groups * static_cast<double>(group.size()));
      report.grad_student_deltas[s] = {reg_coeff * sl.grad.dx, reg_coeff * sl.grad.dy,
                                       reg_coeff * sl.grad.dw, reg_coeff * sl.grad.dh};
    }
    report.l_cls += cls_sum / (num_cls_groups * static_cast<double>(group.size()));
    report.l_reg += reg_sum / (num_reg_groups * static_cast<double>(group.size()));
  }
  if (!background.empty()) {
    double cls_sum = 0.0;
    for (int s : background) {
      const FocalLoss fl = focal_loss(fg_probs(s), kBackgroundClass, cfg.gamma, cfg.alpha_f);
      cls_sum += fl.value;
      const double coeff = 1.0 / (num_cls_groups * static_cast<double>(background.size()));
      for (std::size_t c = 0; c < fl.grad.size(); ++c)
        report.grad_student_scores[s][c] += coeff * fl.grad[c];
    }
    report.l_cls += cls_sum / (num_cls_groups * static_cast<double>(background.size()));
  }

  // Rank matching over the teacher clusters, aligned via the correspondence.
  // Only meaningful under the dense paradigm where cluster structure exists.
  if (cfg.paradigm == Paradigm::kDenseToDense && !cs.clusters.empty()) {
    int max_teacher = -1;
    for (const Candidate& c : cs.candidates) max_teacher = std::max(max_teacher, c.index);
    for (int t : cs.inactive) max_teacher = std::max(max_teacher, t);
    const std::vector<int> to_student = cm.teacher_lookup(max_teacher + 1);

    struct AlignedCluster {
      std::vector<double> teacher_scores;
      std::vector<double> student_scores;
      std::vector<int> student_idx;
      int category = 0;
    };
    std::vector<AlignedCluster> aligned;
    for (const Cluster& cl : cs.clusters) {
      AlignedCluster ac;
      ac.category = cl.category;
      for (int m : cl.members) {
        const Candidate& member = cs.candidates[m];
        const int s = member.index <= max_teacher ? to_student[member.index] : -2;
        if (s < 0) continue;
        ac.teacher_scores.push_back(member.score);
        ac.student_scores.push_back(student.samples[s].class_probs[cl.category]);
        ac.student_idx.push_back(s);
      }
      if (!ac.teacher_scores.empty()) aligned.push_back(std::move(ac));
    }
    if (!aligned.empty()) {
      const double inv = 1.0 / static_cast<double>(aligned.size());
      for (const AlignedCluster& ac : aligned) {
        const RankMatchingLoss rm =
            rank_matching_loss(ac.teacher_scores, ac.student_scores, cfg.temperature);
        report.l_rm += inv * rm.value;
        for (std::size_t k = 0; k < ac.student_idx.size(); ++k)
          report.grad_student_scores[ac.student_idx[k]][ac.category] +=
              cfg.beta * inv * rm.grad[k];
      }
    }
  }

  report.l_unlabeled = combine_unlabeled(report.l_cls, report.l_reg, report.l_rm, cfg.beta);
  report.l_total = combine_total(0.0, report.l_unlabeled, cfg.alpha);
  return report;
}

}  // namespace detail

// Runs the full dense-to-dense pipeline on one image: score filter and
// clustered NMS on the teacher, sample correspondence, label derivation
// (inverse clustering, or the sparse baseline assigner when configured), and
// the combined losses.
inline ImageSupervision supervise_image(const DensePrediction& teacher,
                                        const DensePrediction& student, const RunConfig& cfg) {
  if (teacher.stage != student.stage)
    throw ValidationError("teacher and student predictions carry different stage tags");
  const Stage stage = teacher.stage;
  const bool class_aware = stage == Stage::kRcnn;

  ImageSupervision out;
  out.clusters =
      clustered_nms(filter_active(teacher, cfg.tau(stage), class_aware, cfg.max_active),
                    cfg.nms_iou(stage));

  std::vector<Box> teacher_boxes;
  teacher_boxes.reserve(teacher.samples.size());
  for (const Sample& s : teacher.samples) teacher_boxes.push_back(s.sample_box);
  if (stage == Stage::kRcnn) {
    out.correspondence = match_rcnn(teacher_boxes, static_cast<int>(student.samples.size()));
  } else {
    std::vector<Box> student_boxes;
    student_boxes.reserve(student.samples.size());
    for (const Sample& s : student.samples) student_boxes.push_back(s.sample_box);
    out.correspondence =
        match_rpn(teacher_boxes, teacher.space, student.space, student_boxes, cfg.fpn);
  }

  if (cfg.paradigm == Paradigm::kDenseToDense) {
    out.labels = derive_labels(out.clusters, out.correspondence, teacher.space, student.space,
                               static_cast<int>(student.samples.size()), cfg.regression_target);
  } else {
    std::vector<PseudoLabel> pseudo;
    for (const ReservedBox& r : reserved_boxes(out.clusters))
      pseudo.push_back(
          PseudoLabel{cross_space(r.box, teacher.space, student.space), r.category, r.score});
    std::vector<Box> student_boxes;
    student_boxes.reserve(student.samples.size());
    for (const Sample& s : student.samples) student_boxes.push_back(s.sample_box);
    out.labels = sparse_to_dense_assign(pseudo, cfg.baseline_score_thresh, student_boxes,
                                        cfg.baseline_pos_iou, cfg.baseline_neg_iou);
  }

  out.losses = detail::compute_losses(student, out.labels, out.clusters, out.correspondence, cfg);
  return out;
}

}  // namespace dtg
