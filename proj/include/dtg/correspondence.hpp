#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "dtg/errors.hpp"
#include "dtg/geometry.hpp"

namespace dtg {

struct FpnConfig {
  int num_levels = 5;
  double base_anchor_size = 32.0;
};

// One-to-one teacher -> student sample pairing. Student indices are unique
// across pairs; every teacher sample is either paired or listed unmatched.
struct CorrespondenceMap {
  std::vector<std::pair<int, int>> pairs;  // (teacher, student), teacher ascending
  std::vector<int> unmatched_teacher;

  // Dense teacher -> student table: -1 for unmatched, -2 for not covered.
  std::vector<int> teacher_lookup(int num_teacher) const {
    std::vector<int> to_student(num_teacher, -2);
    for (const auto& [t, s] : pairs) {
      if (t >= 0 && t < num_teacher) to_student[t] = s;
    }
    for (int t : unmatched_teacher) {
      if (t >= 0 && t < num_teacher) to_student[t] = -1;
    }
    return to_student;
  }
};

// R-CNN correspondence: the student is fed a copy of the teacher proposals,
// so the mapping is the identity. A count mismatch means the pipeline fed
// different proposal sets to the two models.
inline CorrespondenceMap match_rcnn(std::span<const Box> teacher_proposals, int num_student) {
  const int n = static_cast<int>(teacher_proposals.size());
  if (n != num_student)
    throw InvariantError("proposal copy mismatch: " + std::to_string(n) + " teacher vs " +
                         std::to_string(num_student) + " student samples");
  CorrespondenceMap cm;
  cm.pairs.reserve(n);
  for (int i = 0; i < n; ++i) cm.pairs.emplace_back(i, i);
  return cm;
}

// Pyramid level for an anchor, by scale: the level whose base anchor size is
// nearest to sqrt(area), clamped into [0, L-1].
inline int assign_fpn_level(const Box& anchor, const FpnConfig& cfg) {
  const double area = anchor.area();
  if (!(area > 0.0)) throw ValidationError("zero-area anchor has no pyramid level");
  const double raw = std::log2(std::sqrt(area) / cfg.base_anchor_size);
  const int level = static_cast<int>(std::llround(raw));
  return std::clamp(level, 0, cfg.num_levels - 1);
}

// RPN correspondence. Teacher anchors are mapped into the student space,
// assigned a pyramid level by scale, and paired with the max-IoU student
// anchor of that level. Injectivity is enforced greedily in descending
// best-IoU order; a teacher anchor whose best student anchor is already
// claimed goes unmatched, as does one with zero overlap everywhere.
inline CorrespondenceMap match_rpn(std::span<const Box> teacher_anchors,
                                   const AugTransform& teacher_space,
                                   const AugTransform& student_space,
                                   std::span<const Box> student_anchors, const FpnConfig& cfg) {
  const int num_teacher = static_cast<int>(teacher_anchors.size());
  const int num_student = static_cast<int>(student_anchors.size());

  std::vector<std::vector<int>> by_level(cfg.num_levels);
  for (int j = 0; j < num_student; ++j)
    by_level[assign_fpn_level(student_anchors[j], cfg)].push_back(j);

  struct Best {
    int teacher = -1;
    int student = -1;
    double overlap = 0.0;
  };
  std::vector<Best> bests;
  bests.reserve(num_teacher);
  CorrespondenceMap cm;

  for (int i = 0; i < num_teacher; ++i) {
    const Box mapped = cross_space(teacher_anchors[i], teacher_space, student_space);
    if (!(mapped.area() > 0.0)) {
      cm.unmatched_teacher.push_back(i);
      continue;
    }
    Best b;
    b.teacher = i;
    for (int j : by_level[assign_fpn_level(mapped, cfg)]) {
      const double ov = iou(mapped, student_anchors[j]);
      if (ov > b.overlap) {
        b.overlap = ov;
        b.student = j;
      }
    }
    if (b.student < 0) {
      cm.unmatched_teacher.push_back(i);
    } else {
      bests.push_back(b);
    }
  }

  std::sort(bests.begin(), bests.end(), [](const Best& a, const Best& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    return a.teacher < b.teacher;
  });
  std::vector<char> claimed(num_student, 0);
  for (const Best& b : bests) {
    if (claimed[b.student]) {
      cm.unmatched_teacher.push_back(b.teacher);
    } else {
      claimed[b.student] = 1;
      cm.pairs.emplace_back(b.teacher, b.student);
    }
  }
  std::sort(cm.pairs.begin(), cm.pairs.end());
  std::sort(cm.unmatched_teacher.begin(), cm.unmatched_teacher.end());
  return cm;
}

}  // namespace dtg
