#pragma once

#include <vector>

#include "dtg/config.hpp"
#include "dtg/scene.hpp"
#include "dtg/supervision.hpp"

namespace dtg {

// Label disagreement between the sparse-to-dense baseline and the dense
// paradigm on identical student samples. misleading_positive: the baseline
// says positive where inverse clustering says background; ambiguous_negative:
// the baseline says background/ignore where inverse clustering says positive.
// Everything else counts as agreement.
struct DisagreementReport {
  int num_samples = 0;
  int agreements = 0;
  std::vector<int> misleading_positive;
  std::vector<int> ambiguous_negative;
};

inline DisagreementReport compare_paradigms(const Scene& scene, const RunConfig& cfg) {
  RunConfig dense_cfg = cfg;
  dense_cfg.paradigm = Paradigm::kDenseToDense;
  RunConfig sparse_cfg = cfg;
  sparse_cfg.paradigm = Paradigm::kSparseToDense;

  const TrainingLabelSet dense = supervise_image(scene.teacher, scene.student, dense_cfg).labels;
  const TrainingLabelSet sparse = supervise_image(scene.teacher, scene.student, sparse_cfg).labels;

  DisagreementReport report;
  report.num_samples = static_cast<int>(dense.size());
  for (int s = 0; s < report.num_samples; ++s) {
    const bool base_positive = sparse[s].kind == LabelKind::kPositive;
    const bool dense_positive = dense[s].kind == LabelKind::kPositive;
    if (base_positive && dense[s].kind == LabelKind::kBackground) {
      report.misleading_positive.push_back(s);
    } else if (!base_positive && dense_positive) {
      report.ambiguous_negative.push_back(s);
    } else {
      ++report.agreements;
    }
  }
  return report;
}

}  // namespace dtg
