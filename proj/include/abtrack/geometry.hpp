#pragma once

// Axis-aligned rectangles and the qualitative spatial predicates used by the
// abduction and anticipation rules.
//
// Boxes are (x, y, w, h) with the origin at the top-left corner and y growing
// downward. A box covers the half-open region [x, x+w) x [y, y+h); overlap
// widths are max(0, min(right) - max(left)). IoU is computed in double
// precision, which is exact for integer pixel boxes up to 2^26 px per side.

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace abtrack {

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

class BBox2D {
 public:
  BBox2D() = default;

  /// Throws std::invalid_argument unless w > 0 and h > 0 (and all finite).
  BBox2D(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
    if (!(std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h))) {
      throw std::invalid_argument("BBox2D: non-finite coordinate");
    }
    if (!(w > 0.0) || !(h > 0.0)) {
      throw std::invalid_argument("BBox2D: width and height must be positive");
    }
  }

  static BBox2D from_corners(double left, double top, double right, double bottom) {
    return BBox2D(left, top, right - left, bottom - top);
  }

  double x() const { return x_; }
  double y() const { return y_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double left() const { return x_; }
  double top() const { return y_; }
  double right() const { return x_ + w_; }
  double bottom() const { return y_ + h_; }
  double area() const { return w_ * h_; }
  Point2D center() const { return {x_ + w_ / 2.0, y_ + h_ / 2.0}; }
  Point2D anchor() const { return {x_, y_}; }

  BBox2D translated(double dx, double dy) const { return BBox2D(x_ + dx, y_ + dy, w_, h_); }

  friend bool operator==(const BBox2D&, const BBox2D&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double w_ = 1.0;
  double h_ = 1.0;
};

inline std::ostream& operator<<(std::ostream& os, const BBox2D& b) {
  return os << '(' << b.x() << ", " << b.y() << ", " << b.w() << ", " << b.h() << ')';
}

inline double intersection_area(const BBox2D& a, const BBox2D& b) {
  const double iw = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.left(), b.left()));
  const double ih = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top()));
  return iw * ih;
}

inline double iou(const BBox2D& a, const BBox2D& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// IoU scaled to an integer in [0, 100000], the matching-likelihood unit.
inline int scaled_iou(const BBox2D& a, const BBox2D& b) {
  return static_cast<int>(std::lround(iou(a, b) * 100000.0));
}

// Allen's interval relations. Every ordered pair of non-degenerate intervals
// stands in exactly one of these.
enum class IntervalRelation {
  before,
  meets,
  overlaps,
  starts,
  during,
  finishes,
  equal,
  finished_by,
  contains,
  started_by,
  overlapped_by,
  met_by,
  after,
};

inline constexpr std::array<IntervalRelation, 13> kAllIntervalRelations = {
    IntervalRelation::before,      IntervalRelation::meets,         IntervalRelation::overlaps,
    IntervalRelation::starts,      IntervalRelation::during,        IntervalRelation::finishes,
    IntervalRelation::equal,       IntervalRelation::finished_by,   IntervalRelation::contains,
    IntervalRelation::started_by,  IntervalRelation::overlapped_by, IntervalRelation::met_by,
    IntervalRelation::after,
};

inline std::string_view to_string(IntervalRelation r) {
  switch (r) {
    case IntervalRelation::before: return "before";
    case IntervalRelation::meets: return "meets";
    case IntervalRelation::overlaps: return "overlaps";
    case IntervalRelation::starts: return "starts";
    case IntervalRelation::during: return "during";
    case IntervalRelation::finishes: return "finishes";
    case IntervalRelation::equal: return "equal";
    case IntervalRelation::finished_by: return "finished_by";
    case IntervalRelation::contains: return "contains";
    case IntervalRelation::started_by: return "started_by";
    case IntervalRelation::overlapped_by: return "overlapped_by";
    case IntervalRelation::met_by: return "met_by";
    case IntervalRelation::after: return "after";
  }
  return "?";
}

inline IntervalRelation inverse(IntervalRelation r) {
  // The enumeration is laid out symmetrically around `equal`.
  return static_cast<IntervalRelation>(12 - static_cast<int>(r));
}

/// Relation of [a1, a2) to [b1, b2). Requires a1 < a2 and b1 < b2.
inline IntervalRelation interval_relation(double a1, double a2, double b1, double b2) {
  if (a2 < b1) return IntervalRelation::before;
  if (a2 == b1) return IntervalRelation::meets;
  if (b2 < a1) return IntervalRelation::after;
  if (b2 == a1) return IntervalRelation::met_by;
  if (a1 == b1 && a2 == b2) return IntervalRelation::equal;
  if (a1 == b1) return a2 < b2 ? IntervalRelation::starts : IntervalRelation::started_by;
  if (a2 == b2) return a1 > b1 ? IntervalRelation::finishes : IntervalRelation::finished_by;
  if (a1 > b1 && a2 < b2) return IntervalRelation::during;
  if (a1 < b1 && a2 > b2) return IntervalRelation::contains;
  return a1 < b1 ? IntervalRelation::overlaps : IntervalRelation::overlapped_by;
}

struct RectRelation {
  IntervalRelation horizontal;
  IntervalRelation vertical;

  friend bool operator==(const RectRelation&, const RectRelation&) = default;
};

inline RectRelation rect_relation(const BBox2D& a, const BBox2D& b) {
  return {interval_relation(a.left(), a.right(), b.left(), b.right()),
          interval_relation(a.top(), a.bottom(), b.top(), b.bottom())};
}

/// `a` can be hidden behind `b`: the boxes overlap and b's bottom edge is at or
/// below a's, i.e. b stands nearer to the camera on a common ground plane.
inline bool overlapping_top(const BBox2D& a, const BBox2D& b) {
  return intersection_area(a, b) > 0.0 && b.bottom() >= a.bottom();
}

/// `a` lies strictly inside `b`: every edge of a is strictly within b.
inline bool proper_part(const BBox2D& a, const BBox2D& b) {
  return a.left() > b.left() && a.right() < b.right() && a.top() > b.top() &&
         a.bottom() < b.bottom();
}

struct FrameGeometry {
  double width = 0.0;
  double height = 0.0;

  bool known() const { return width > 0.0 && height > 0.0; }
  friend bool operator==(const FrameGeometry&, const FrameGeometry&) = default;
};

// The ego corridor in front of the vehicle, as fractions of the image.
struct FrontRegion {
  double x_min = 1.0 / 3.0;
  double x_max = 2.0 / 3.0;
  double y_min = 0.5;
  double y_max = 1.0;
};

/// Closed corridor test: x in [x_min*W, x_max*W] and y in [y_min*H, y_max*H].
inline bool in_front_region(const Point2D& p, const FrameGeometry& frame,
                            const FrontRegion& region = {}) {
  if (!frame.known()) return false;
  return p.x >= region.x_min * frame.width && p.x <= region.x_max * frame.width &&
         p.y >= region.y_min * frame.height && p.y <= region.y_max * frame.height;
}

/// True when `b` reaches within `margin` px of any image border (or beyond it).
inline bool touches_border(const BBox2D& b, const FrameGeometry& frame, double margin) {
  return b.left() <= margin || b.top() <= margin || b.right() >= frame.width - margin ||
         b.bottom() >= frame.height - margin;
}

inline bool intersects_frame(const BBox2D& b, const FrameGeometry& frame) {
  return b.right() > 0.0 && b.bottom() > 0.0 && b.left() < frame.width && b.top() < frame.height;
}

}  // namespace abtrack
