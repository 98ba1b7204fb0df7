#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "dtg/nms.hpp"

namespace dtg {

// Textbook greedy NMS used as an independent reference for the clustering
// implementation. Deliberately self-contained: it sorts instead of scanning
// and carries its own overlap arithmetic, so the two paths share no code
// beyond the Candidate POD.
inline std::vector<int> oracle_nms(std::span<const Candidate> candidates, double nms_iou) {
  const int n = static_cast<int>(candidates.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (candidates[a].score != candidates[b].score) return candidates[a].score > candidates[b].score;
    if (candidates[a].index != candidates[b].index) return candidates[a].index < candidates[b].index;
    return candidates[a].category < candidates[b].category;
  });

  auto overlap = [](const Box& a, const Box& b) {
    const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    const double inter = w * h;
    const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
    const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
    const double uni = area_a + area_b - inter;
    return uni > 0.0 ? inter / uni : 0.0;
  };

  std::vector<char> suppressed(n, 0);
  std::vector<int> kept;
  for (int oi = 0; oi < n; ++oi) {
    const int i = order[oi];
    if (suppressed[i]) continue;
    kept.push_back(i);
    for (int oj = oi + 1; oj < n; ++oj) {
      const int j = order[oj];
      if (suppressed[j] || candidates[j].category != candidates[i].category) continue;
      if (overlap(candidates[j].box, candidates[i].box) >= nms_iou) suppressed[j] = 1;
    }
  }
  return kept;
}

}  // namespace dtg
