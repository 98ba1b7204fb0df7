#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "dtg/labels.hpp"
#include "dtg/nms.hpp"
#include "dtg/rng.hpp"

using dtg::ActiveSet;
using dtg::Box;
using dtg::Candidate;
using dtg::ClusterSet;
using dtg::CorrespondenceMap;
using dtg::Label;
using dtg::LabelKind;
using dtg::PseudoLabel;
using dtg::RegressionDelta;
using dtg::TrainingLabelSet;

namespace {

const dtg::AugTransform kIdentity{false, 1.0, 0.0, 0.0, 640.0, 640.0};

CorrespondenceMap identity_map(int n) {
  CorrespondenceMap cm;
  for (int i = 0; i < n; ++i) cm.pairs.emplace_back(i, i);
  return cm;
}

Box random_box(dtg::Rng& rng) {
  const double x1 = rng.uniform(0.0, 500.0);
  const double y1 = rng.uniform(0.0, 500.0);
  return Box{x1, y1, x1 + rng.uniform(2.0, 120.0), y1 + rng.uniform(2.0, 120.0)};
}

}  // namespace

// ------------------------------ derive_labels ---------------------------------

TEST(DeriveLabels, SingletonClusterSuperviseItsStudent) {
  ActiveSet as;
  as.active.push_back(Candidate{1, 2, 0.8, Box{10, 10, 40, 40}});
  as.inactive = {0, 2};
  const ClusterSet cs = dtg::clustered_nms(as, 0.5);
  const TrainingLabelSet labels = dtg::derive_labels(cs, identity_map(3), kIdentity, kIdentity, 3);

  ASSERT_EQ(labels.size(), 3u);
  EXPECT_EQ(labels[0].kind, LabelKind::kBackground);
  EXPECT_EQ(labels[1].kind, LabelKind::kPositive);
  EXPECT_EQ(labels[1].class_id, 2);
  EXPECT_EQ(labels[1].cluster_id, 0);
  EXPECT_DOUBLE_EQ(labels[1].target.x1, 10.0);
  EXPECT_EQ(labels[2].kind, LabelKind::kBackground);
}

TEST(DeriveLabels, EmptyClustersBackgroundsTheInactive) {
  ClusterSet cs;
  cs.inactive = {0, 1};
  const TrainingLabelSet labels = dtg::derive_labels(cs, identity_map(4), kIdentity, kIdentity, 4);
  EXPECT_EQ(labels[0].kind, LabelKind::kBackground);
  EXPECT_EQ(labels[1].kind, LabelKind::kBackground);
  EXPECT_EQ(labels[2].kind, LabelKind::kIgnore);
  EXPECT_EQ(labels[3].kind, LabelKind::kIgnore);
}

TEST(DeriveLabels, MembersInheritReservedBoxAsTarget) {
  ActiveSet as;
  as.active.push_back(Candidate{0, 1, 0.9, Box{0, 0, 20, 20}});
  as.active.push_back(Candidate{1, 1, 0.7, Box{1, 1, 21, 21}});
  const ClusterSet cs = dtg::clustered_nms(as, 0.5);
  ASSERT_EQ(cs.clusters.size(), 1u);
  const TrainingLabelSet labels = dtg::derive_labels(cs, identity_map(2), kIdentity, kIdentity, 2);
  EXPECT_EQ(labels[1].kind, LabelKind::kPositive);
  EXPECT_DOUBLE_EQ(labels[1].target.x2, 20.0);  // the reserved box, not its own
}

TEST(DeriveLabels, AllBoxesModeUsesEachMembersOwnBox) {
  ActiveSet as;
  as.active.push_back(Candidate{0, 1, 0.9, Box{0, 0, 20, 20}});
  as.active.push_back(Candidate{1, 1, 0.7, Box{1, 1, 21, 21}});
  const ClusterSet cs = dtg::clustered_nms(as, 0.5);
  const TrainingLabelSet labels = dtg::derive_labels(cs, identity_map(2), kIdentity, kIdentity, 2,
                                                     dtg::RegressionTargetMode::kAllBoxes);
  EXPECT_DOUBLE_EQ(labels[1].target.x2, 21.0);
}

TEST(DeriveLabels, TargetIsMappedIntoStudentSpace) {
  dtg::AugTransform student = kIdentity;
  student.hflip = true;
  ActiveSet as;
  as.active.push_back(Candidate{0, 0, 0.9, Box{10, 0, 20, 10}});
  const ClusterSet cs = dtg::clustered_nms(as, 0.5);
  const TrainingLabelSet labels = dtg::derive_labels(cs, identity_map(1), kIdentity, student, 1);
  EXPECT_NEAR(labels[0].target.x1, 620.0, 1e-9);
  EXPECT_NEAR(labels[0].target.x2, 630.0, 1e-9);
}

TEST(DeriveLabels, UnmatchedTeacherLeavesStudentIgnored) {
  ActiveSet as;
  as.active.push_back(Candidate{0, 1, 0.9, Box{0, 0, 20, 20}});
  as.inactive = {1};
  const ClusterSet cs = dtg::clustered_nms(as, 0.5);
  CorrespondenceMap cm;
  cm.unmatched_teacher = {0, 1};
  const TrainingLabelSet labels = dtg::derive_labels(cs, cm, kIdentity, kIdentity, 2);
  EXPECT_EQ(labels[0].kind, LabelKind::kIgnore);
  EXPECT_EQ(labels[1].kind, LabelKind::kIgnore);
}

TEST(DeriveLabels, UncoveredTeacherIndexIsAWiringBug) {
  ActiveSet as;
  as.active.push_back(Candidate{5, 1, 0.9, Box{0, 0, 20, 20}});
  const ClusterSet cs = dtg::clustered_nms(as, 0.5);
  EXPECT_THROW(dtg::derive_labels(cs, identity_map(3), kIdentity, kIdentity, 3),
               dtg::InvariantError);
}

TEST(DeriveLabels, CrossClassConflictGoesToHigherScoredCluster) {
  // one teacher sample active in two classes, landing in two clusters
  ActiveSet as;
  as.active.push_back(Candidate{0, 0, 0.6, Box{0, 0, 20, 20}});
  as.active.push_back(Candidate{0, 1, 0.8, Box{0, 0, 20, 20}});
  const ClusterSet cs = dtg::clustered_nms(as, 0.5);
  ASSERT_EQ(cs.clusters.size(), 2u);
  const TrainingLabelSet labels = dtg::derive_labels(cs, identity_map(1), kIdentity, kIdentity, 1);
  ASSERT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels[0].kind, LabelKind::kPositive);
  EXPECT_EQ(labels[0].class_id, 1);  // the 0.8 cluster
}

TEST(DeriveLabels, PositivesOfOneClusterShareClassAndTarget) {
  dtg::Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    ActiveSet as;
    const int n = rng.uniform_int(1, 30);
    for (int i = 0; i < n; ++i)
      as.active.push_back(
          Candidate{i, rng.uniform_int(0, 2), rng.uniform(0.3, 1.0), random_box(rng)});
    const ClusterSet cs = dtg::clustered_nms(as, 0.5);
    const TrainingLabelSet labels =
        dtg::derive_labels(cs, identity_map(n), kIdentity, kIdentity, n);
    ASSERT_EQ(labels.size(), static_cast<std::size_t>(n));  // totality

    std::map<int, std::pair<int, Box>> seen;  // cluster -> (class, target)
    for (const Label& l : labels) {
      if (l.kind != LabelKind::kPositive) continue;
      const auto it = seen.find(l.cluster_id);
      if (it == seen.end()) {
        seen.emplace(l.cluster_id, std::make_pair(l.class_id, l.target));
      } else {
        EXPECT_EQ(it->second.first, l.class_id);
        EXPECT_DOUBLE_EQ(it->second.second.x1, l.target.x1);
        EXPECT_DOUBLE_EQ(it->second.second.y2, l.target.y2);
      }
    }
  }
}

// ------------------------------ encode_delta ----------------------------------

TEST(EncodeDelta, IdenticalBoxesGiveZeroDeltas) {
  const Box b{5, 5, 25, 35};
  const RegressionDelta d = dtg::encode_delta(b, b);
  EXPECT_DOUBLE_EQ(d.dx, 0.0);
  EXPECT_DOUBLE_EQ(d.dy, 0.0);
  EXPECT_DOUBLE_EQ(d.dw, 0.0);
  EXPECT_DOUBLE_EQ(d.dh, 0.0);
}

TEST(EncodeDelta, DoubledBoxMatchesHandArithmetic) {
  const RegressionDelta d = dtg::encode_delta(Box{0, 0, 10, 10}, Box{0, 0, 20, 20});
  EXPECT_DOUBLE_EQ(d.dx, 0.5);
  EXPECT_DOUBLE_EQ(d.dy, 0.5);
  EXPECT_DOUBLE_EQ(d.dw, std::log(2.0));
  EXPECT_DOUBLE_EQ(d.dh, std::log(2.0));
}

TEST(EncodeDelta, ZeroAreaTargetIsAnError) {
  EXPECT_THROW(dtg::encode_delta(Box{0, 0, 10, 10}, Box{5, 5, 5, 5}), dtg::ValidationError);
  EXPECT_THROW(dtg::encode_delta(Box{5, 5, 5, 5}, Box{0, 0, 10, 10}), dtg::ValidationError);
}

TEST(EncodeDelta, DecodeInvertsEncode) {
  dtg::Rng rng(42);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Box sample = random_box(rng);
    const Box target = random_box(rng);
    const Box back = dtg::decode_delta(dtg::encode_delta(sample, target), sample);
    worst = std::max({worst, std::abs(back.x1 - target.x1), std::abs(back.y1 - target.y1),
                      std::abs(back.x2 - target.x2), std::abs(back.y2 - target.y2)});
  }
  EXPECT_LT(worst, 1e-6);
}

// -------------------------- sparse_to_dense_assign ----------------------------

TEST(SparseToDense, NoSurvivingPseudoBoxesMeansAllBackground) {
  const std::vector<PseudoLabel> pseudo = {{Box{0, 0, 10, 10}, 0, 0.5}};
  const std::vector<Box> students = {Box{0, 0, 10, 10}, Box{100, 100, 110, 110}};
  const TrainingLabelSet labels = dtg::sparse_to_dense_assign(pseudo, 0.9, students, 0.5, 0.5);
  EXPECT_EQ(labels[0].kind, LabelKind::kBackground);
  EXPECT_EQ(labels[1].kind, LabelKind::kBackground);
}

TEST(SparseToDense, HighOverlapBecomesPositive) {
  // the misleading-positive geometry: student box with IoU 0.6 to the pseudo box
  const std::vector<PseudoLabel> pseudo = {{Box{50, 50, 150, 150}, 1, 0.95}};
  const std::vector<Box> students = {Box{50, 200.0 - 500.0 / 3.0, 150, 200}};
  const TrainingLabelSet labels = dtg::sparse_to_dense_assign(pseudo, 0.9, students, 0.5, 0.5);
  ASSERT_EQ(labels[0].kind, LabelKind::kPositive);
  EXPECT_EQ(labels[0].class_id, 1);
  EXPECT_EQ(labels[0].cluster_id, 0);
}

TEST(SparseToDense, BandBetweenThresholdsIsIgnored) {
  const std::vector<PseudoLabel> pseudo = {{Box{0, 0, 10, 10}, 0, 0.95}};
  const std::vector<Box> students = {Box{0, 0, 10, 5}};  // iou 0.5
  const TrainingLabelSet labels = dtg::sparse_to_dense_assign(pseudo, 0.9, students, 0.7, 0.3);
  EXPECT_EQ(labels[0].kind, LabelKind::kIgnore);
}

TEST(SparseToDense, ArgmaxPseudoBoxWins) {
  const std::vector<PseudoLabel> pseudo = {{Box{0, 0, 10, 10}, 0, 0.95},
                                           {Box{2, 0, 12, 10}, 1, 0.95}};
  const std::vector<Box> students = {Box{2, 0, 12, 10}};
  const TrainingLabelSet labels = dtg::sparse_to_dense_assign(pseudo, 0.9, students, 0.5, 0.5);
  ASSERT_EQ(labels[0].kind, LabelKind::kPositive);
  EXPECT_EQ(labels[0].class_id, 1);
}

TEST(SparseToDense, InvertedThresholdsAreRejected) {
  EXPECT_THROW(dtg::sparse_to_dense_assign({}, 0.9, {}, 0.3, 0.5), dtg::ValidationError);
}
