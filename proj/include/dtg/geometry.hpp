#pragma once

#include <algorithm>

namespace dtg {

// Axis-aligned box, corner encoded, continuous coordinates in pixels of the
// owning view. Area carries no +1 discretization term.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  bool valid() const { return x1 <= x2 && y1 <= y2; }
};

inline double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;  // both boxes degenerate
  return inter / uni;
}

// View transform used by the weak/strong augmentation pair: isotropic scale
// plus translation, followed by an optional horizontal mirror about the view
// width. Boxes are never clipped to the view; clipping would destroy the
// invertibility the teacher-student correspondence relies on.
struct AugTransform {
  bool hflip = false;
  double scale = 1.0;
  double dx = 0.0;
  double dy = 0.0;
  double view_width = 0.0;
  double view_height = 0.0;
};

inline Box apply_transform(const Box& b, const AugTransform& t) {
  double x1 = t.scale * b.x1 + t.dx;
  double x2 = t.scale * b.x2 + t.dx;
  const double y1 = t.scale * b.y1 + t.dy;
  const double y2 = t.scale * b.y2 + t.dy;
  if (t.hflip) {
    const double mx1 = t.view_width - x2;
    const double mx2 = t.view_width - x1;
    x1 = mx1;
    x2 = mx2;
  }
  return Box{x1, y1, x2, y2};
}

inline AugTransform invert(const AugTransform& t) {
  AugTransform inv;
  inv.hflip = t.hflip;
  inv.scale = 1.0 / t.scale;
  inv.view_width = t.view_width / t.scale;
  inv.view_height = t.view_height / t.scale;
  // The mirror runs after scale+shift on the forward path, so the shift folds
  // with opposite sign on the mirrored axis.
  inv.dx = t.hflip ? t.dx / t.scale : -t.dx / t.scale;
  inv.dy = -t.dy / t.scale;
  return inv;
}

// Maps a box from one augmented view to another over the same image.
inline Box cross_space(const Box& b, const AugTransform& from, const AugTransform& to) {
  return apply_transform(apply_transform(b, invert(from)), to);
}

}  // namespace dtg
