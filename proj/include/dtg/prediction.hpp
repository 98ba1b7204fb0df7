#pragma once

#include <string>
#include <vector>

#include "dtg/geometry.hpp"

namespace dtg {

enum class Stage { kRpn, kRcnn };

inline const char* stage_name(Stage s) { return s == Stage::kRpn ? "rpn" : "rcnn"; }

// One dense training sample. sample_box is the anchor (RPN) or proposal
// (R-CNN); regressed_box is the detection box after the predicted offsets.
// class_probs holds C foreground entries followed by background for R-CNN,
// or a single objectness entry for RPN.
struct Sample {
  int sample_id = 0;
  Box sample_box;
  std::vector<double> class_probs;
  Box regressed_box;
};

// All predictions of one image, expressed in one augmentation space.
struct DensePrediction {
  std::string image_id;
  Stage stage = Stage::kRcnn;
  AugTransform space;
  std::vector<Sample> samples;

  int num_foreground_classes() const {
    if (samples.empty()) return 0;
    const int n = static_cast<int>(samples.front().class_probs.size());
    return stage == Stage::kRpn ? 1 : n - 1;
  }
};

}  // namespace dtg
