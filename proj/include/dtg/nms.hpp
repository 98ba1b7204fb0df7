#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "dtg/errors.hpp"
#include "dtg/geometry.hpp"
#include "dtg/prediction.hpp"

namespace dtg {

// A detection that survived the score pre-filter. `index` is the sample index
// in the owning prediction; in class-aware mode one sample can contribute one
// candidate per foreground class above the threshold.
struct Candidate {
  int index = 0;
  int category = 0;
  double score = 0.0;
  Box box;
};

// Deterministic ranking used everywhere a "highest scoring" candidate is
// picked: score descending, then sample index, then category.
inline bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.index != b.index) return a.index < b.index;
  return a.category < b.category;
}

struct ActiveSet {
  std::vector<Candidate> active;
  std::vector<int> inactive;  // sample indices with every score below tau
};

// One NMS cluster: the reserved candidate plus everything it suppressed.
// reserved/members are positions into ClusterSet::candidates.
struct Cluster {
  int reserved = 0;
  std::vector<int> members;  // includes reserved
  int category = 0;
};

struct ClusterSet {
  std::vector<Candidate> candidates;
  std::vector<Cluster> clusters;
  std::vector<int> inactive;  // sample indices, carried over from the filter
};

struct ReservedBox {
  Box box;
  int category = 0;
  double score = 0.0;
};

// Score pre-filter ahead of NMS. class_aware=true is R-CNN behaviour (one
// candidate per (sample, foreground class) with prob >= tau); class_aware=false
// is RPN behaviour over the single objectness entry. `inactive` collects every
// sample that contributed no candidate, i.e. the clear-background samples.
//
// max_active > 0 keeps only the top-scoring candidates going into NMS, the way
// detectors cap pre-NMS candidates. Samples dropped by the cap are NOT added
// to `inactive`: they are above tau and so not clear background.
inline ActiveSet filter_active(const DensePrediction& pred, double tau, bool class_aware,
                               int max_active = 0) {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0,1)");
  ActiveSet out;
  const int n = static_cast<int>(pred.samples.size());
  for (int s = 0; s < n; ++s) {
    const Sample& sample = pred.samples[s];
    bool any = false;
    if (class_aware) {
      const int fg = static_cast<int>(sample.class_probs.size()) - 1;
      for (int c = 0; c < fg; ++c) {
        if (sample.class_probs[c] >= tau) {
          out.active.push_back(Candidate{s, c, sample.class_probs[c], sample.regressed_box});
          any = true;
        }
      }
    } else if (!sample.class_probs.empty() && sample.class_probs[0] >= tau) {
      out.active.push_back(Candidate{s, 0, sample.class_probs[0], sample.regressed_box});
      any = true;
    }
    if (!any) out.inactive.push_back(s);
  }
  if (max_active > 0 && static_cast<int>(out.active.size()) > max_active) {
    std::vector<int> order(out.active.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return candidate_before(out.active[a], out.active[b]);
    });
    order.resize(max_active);
    std::sort(order.begin(), order.end());  // keep filter order among survivors
    std::vector<Candidate> kept;
    kept.reserve(order.size());
    for (int i : order) kept.push_back(out.active[i]);
    out.active = std::move(kept);
  }
  return out;
}

// Greedy NMS that keeps the clustering it induces: repeatedly reserve the
// best-ranked remaining candidate and move every remaining same-category
// candidate with iou >= nms_iou into its cluster. The produced clusters
// partition the active set.
inline ClusterSet clustered_nms(ActiveSet active_set, double nms_iou) {
  if (!(nms_iou > 0.0 && nms_iou < 1.0)) throw ValidationError("nms_iou must lie in (0,1)");
  ClusterSet cs;
  cs.candidates = std::move(active_set.active);
  cs.inactive = std::move(active_set.inactive);
  const int n = static_cast<int>(cs.candidates.size());
  std::vector<char> taken(n, 0);
  int remaining = n;
  while (remaining > 0) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (!taken[i] && (best < 0 || candidate_before(cs.candidates[i], cs.candidates[best])))
        best = i;
    }
    Cluster cl;
    cl.reserved = best;
    cl.category = cs.candidates[best].category;
    cl.members.push_back(best);
    taken[best] = 1;
    --remaining;
    for (int i = 0; i < n; ++i) {
      if (taken[i] || cs.candidates[i].category != cl.category) continue;
      if (iou(cs.candidates[i].box, cs.candidates[best].box) >= nms_iou) {
        cl.members.push_back(i);
        taken[i] = 1;
        --remaining;
      }
    }
    cs.clusters.push_back(std::move(cl));
  }
  return cs;
}

// The post-NMS detections: one entry per cluster.
inline std::vector<ReservedBox> reserved_boxes(const ClusterSet& cs) {
  std::vector<ReservedBox> out;
  out.reserve(cs.clusters.size());
  for (const Cluster& cl : cs.clusters) {
    const Candidate& c = cs.candidates[cl.reserved];
    out.push_back(ReservedBox{c.box, c.category, c.score});
  }
  return out;
}

}  // namespace dtg
