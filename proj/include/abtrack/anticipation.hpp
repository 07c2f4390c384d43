#pragma once

// Forward simulation over the abduced state: when will a hidden track move out
// of its occluder, where will it be, and does that happen in front of the
// vehicle soon enough to warn about.

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "abtrack/domain.hpp"
#include "abtrack/geometry.hpp"
#include "abtrack/tracker.hpp"

namespace abtrack {

struct Kinematics {
  BBox2D box;  // at the snapshot frame
  Velocity velocity;
};

// Read-only view of an engine at one frame.
struct AnticipationSnapshot {
  Frame frame = 0;
  std::map<TrackId, Kinematics> tracks;  // live tracks
  FluentStore fluents;
  std::optional<FrameGeometry> frame_geometry;
};

inline AnticipationSnapshot snapshot(const Engine& engine) {
  AnticipationSnapshot s;
  s.frame = engine.current_frame().value_or(0);
  s.fluents = engine.fluents();
  s.frame_geometry = engine.config().frame_geometry;
  for (const auto& t : engine.tracks())
    if (t.live()) s.tracks[t.id] = {t.filter.box(), t.filter.velocity()};
  return s;
}

struct Anticipation {
  TrackId hidden{};
  TrackId occluder{};
  Frame frame = 0;
  Point2D position;

  friend bool operator==(const Anticipation&, const Anticipation&) = default;
};

struct Warning {
  TrackId track{};
  Frame frame = 0;

  friend bool operator==(const Warning&, const Warning&) = default;
};

/// Anchor (top-left corner) of `k` advanced to frame `at`, linearly.
inline Point2D interpolated_position(const Kinematics& k, Frame current, Frame at) {
  if (at <= current) throw std::invalid_argument("interpolated_position: frame not in the future");
  const double dt = static_cast<double>(at - current);
  return {k.box.x() + k.velocity.dx * dt, k.box.y() + k.velocity.dy * dt};
}

/// For every hidden_by pair whose hidden box currently lies inside the
/// occluder, the first frame within `horizon` at which the dead-reckoned
/// hidden box is no longer a proper part of the dead-reckoned occluder.
inline std::vector<Anticipation> anticipate_unhide(const AnticipationSnapshot& s, int horizon = 60) {
  std::vector<Anticipation> out;
  for (const auto& [hidden, occluder] : s.fluents.hidden_pairs()) {
    auto h = s.tracks.find(hidden);
    auto o = s.tracks.find(occluder);
    if (h == s.tracks.end() || o == s.tracks.end()) continue;
    const Kinematics& a = h->second;
    const Kinematics& b = o->second;
    if (!proper_part(a.box, b.box)) continue;
    for (int k = 1; k <= horizon; ++k) {
      const BBox2D ak = a.box.translated(a.velocity.dx * k, a.velocity.dy * k);
      const BBox2D bk = b.box.translated(b.velocity.dx * k, b.velocity.dy * k);
      if (!proper_part(ak, bk)) {
        const Frame at = s.frame + k;
        out.push_back({hidden, occluder, at, interpolated_position(a, s.frame, at)});
        break;
      }
    }
  }
  return out;
}

/// One warning per anticipation due in fewer than `threshold` frames at a
/// position inside the front corridor.
inline std::vector<Warning> warnings(const std::vector<Anticipation>& anticipations, Frame current,
                                     const FrameGeometry& frame, int threshold,
                                     const FrontRegion& region = {}) {
  std::vector<Warning> out;
  for (const auto& a : anticipations)
    if (a.frame - current < threshold && in_front_region(a.position, frame, region))
      out.push_back({a.hidden, a.frame});
  return out;
}

/// `anticipate(unhides_from_behind(trk_41, trk_3), 202)`
inline std::string anticipate_term(const Anticipation& a) {
  return "anticipate(unhides_from_behind(" + to_string(a.hidden) + ", " + to_string(a.occluder) +
         "), " + std::to_string(a.frame) + ")";
}

/// `point2d(interpolated_position(trk_41, 202), 738, 495)`
inline std::string position_term(const Anticipation& a) {
  return "point2d(interpolated_position(" + to_string(a.hidden) + ", " + std::to_string(a.frame) +
         "), " + std::to_string(std::lround(a.position.x)) + ", " +
         std::to_string(std::lround(a.position.y)) + ")";
}

/// `warning(hidden_entity_in_front(trk_41, 202))`
inline std::string warning_term(const Warning& w) {
  return "warning(hidden_entity_in_front(" + to_string(w.track) + ", " + std::to_string(w.frame) + "))";
}

}  // namespace abtrack
