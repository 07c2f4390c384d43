#pragma once

// Scene ontology: detections, tracks, events, and the functional fluents whose
// values persist by inertia until an event causes a change.

#include <algorithm>
#include <climits>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "abtrack/geometry.hpp"
#include "abtrack/motion.hpp"

namespace abtrack {

using Frame = std::int64_t;

enum class TrackId : std::int32_t {};
enum class DetectionId : std::int32_t {};

constexpr std::int32_t raw(TrackId id) { return static_cast<std::int32_t>(id); }
constexpr std::int32_t raw(DetectionId id) { return static_cast<std::int32_t>(id); }

inline std::string to_string(TrackId id) { return "trk_" + std::to_string(raw(id)); }
inline std::string to_string(DetectionId id) { return "det_" + std::to_string(raw(id)); }

struct Detection {
  DetectionId id{};
  std::string cls;
  int confidence = 0;  // percent, 0..100
  BBox2D box;

  friend bool operator==(const Detection&, const Detection&) = default;
};

enum class TrackState { active, halted, ended };

inline std::string_view to_string(TrackState s) {
  switch (s) {
    case TrackState::active: return "active";
    case TrackState::halted: return "halted";
    case TrackState::ended: return "ended";
  }
  return "?";
}

enum class Provenance { observed, interpolated };

struct HistoryEntry {
  Frame frame = 0;
  BBox2D box;
  Provenance provenance = Provenance::observed;
  int confidence = 0;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct Track {
  TrackId id{};
  std::string cls;
  TrackState state = TrackState::active;
  std::vector<HistoryEntry> history;  // the motion track, frames strictly increasing
  MotionFilter filter;
  BBox2D predicted;       // box for the frame currently being processed
  Frame halted_since = 0;  // first frame of the current halt

  Track(TrackId id_, std::string cls_, const BBox2D& first_box, const MotionNoise& noise = {})
      : id(id_), cls(std::move(cls_)), filter(first_box, noise), predicted(first_box) {}

  bool live() const { return state != TrackState::ended; }
};

// A track as it enters one frame's problem: its prediction and lifecycle state.
struct Prediction {
  TrackId id{};
  std::string cls;
  TrackState state = TrackState::active;
  BBox2D box;
  int frames_halted = 0;
};

// ---------------------------------------------------------------------------
// Events

enum class EventKind {
  hides_behind,
  unhides_from_behind,
  recover,
  missing_detections,
  leaves_fov,
  lost,
  enters_fov,
  noise,
};

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::hides_behind: return "hides_behind";
    case EventKind::unhides_from_behind: return "unhides_from_behind";
    case EventKind::recover: return "recover";
    case EventKind::missing_detections: return "missing_detections";
    case EventKind::leaves_fov: return "leaves_fov";
    case EventKind::lost: return "lost";
    case EventKind::enters_fov: return "enters_fov";
    case EventKind::noise: return "noise";
  }
  return "?";
}

inline std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (auto k : {EventKind::hides_behind, EventKind::unhides_from_behind, EventKind::recover,
                 EventKind::missing_detections, EventKind::leaves_fov, EventKind::lost,
                 EventKind::enters_fov, EventKind::noise}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline bool is_binary(EventKind k) {
  return k == EventKind::hides_behind || k == EventKind::unhides_from_behind;
}

// Events about a track that does not exist yet (a started detection) or about
// an ignored detection name the detection instead.
using EntityRef = std::variant<TrackId, DetectionId>;

inline std::string to_string(const EntityRef& ref) {
  return std::visit([](auto id) { return to_string(id); }, ref);
}

struct EventOccurrence {
  EventKind kind = EventKind::noise;
  EntityRef subject;
  std::optional<TrackId> other;  // second argument of the binary events
  Frame frame = 0;

  friend bool operator==(const EventOccurrence&, const EventOccurrence&) = default;

  /// Total order used for deterministic tie-breaking: frame, kind, ids.
  friend bool operator<(const EventOccurrence& a, const EventOccurrence& b) {
    auto key = [](const EventOccurrence& e) {
      return std::tuple(e.frame, static_cast<int>(e.kind), e.subject.index(),
                        std::visit([](auto id) { return static_cast<int>(id); }, e.subject),
                        e.other ? raw(*e.other) : -1);
    };
    return key(a) < key(b);
  }

  std::optional<TrackId> subject_track() const {
    if (auto* t = std::get_if<TrackId>(&subject)) return *t;
    return std::nullopt;
  }
};

inline EventOccurrence make_event(EventKind kind, EntityRef subject, Frame frame,
                                  std::optional<TrackId> other = std::nullopt) {
  return {kind, subject, other, frame};
}

/// `hides_behind(trk_13,trk_12)`
inline std::string event_term(const EventOccurrence& e) {
  std::string s(to_string(e.kind));
  s += '(';
  s += to_string(e.subject);
  if (e.other) {
    s += ',';
    s += to_string(*e.other);
  }
  s += ')';
  return s;
}

/// `occurs_at(hides_behind(trk_13,trk_12),235)`
inline std::string occurs_at(const EventOccurrence& e) {
  return "occurs_at(" + event_term(e) + "," + std::to_string(e.frame) + ")";
}

// ---------------------------------------------------------------------------
// Fluents

enum class Visibility { fully_visible, partially_visible, not_visible };

inline std::string_view to_string(Visibility v) {
  switch (v) {
    case Visibility::fully_visible: return "fully_visible";
    case Visibility::partially_visible: return "partially_visible";
    case Visibility::not_visible: return "not_visible";
  }
  return "?";
}

enum class FluentKind { visibility, hidden_by, clipped, in_fov };

inline std::string_view to_string(FluentKind k) {
  switch (k) {
    case FluentKind::visibility: return "visibility";
    case FluentKind::hidden_by: return "hidden_by";
    case FluentKind::clipped: return "clipped";
    case FluentKind::in_fov: return "in_fov";
  }
  return "?";
}

struct FluentInstance {
  FluentKind kind = FluentKind::visibility;
  TrackId track{};
  std::optional<TrackId> other;  // hidden_by only

  friend auto operator<=>(const FluentInstance&, const FluentInstance&) = default;
};

using FluentValue = std::variant<Visibility, bool>;

/// Current values of the functional fluents for every live track.
class FluentStore {
 public:
  struct TrackFluents {
    Visibility visibility = Visibility::fully_visible;
    bool clipped = false;
    bool in_fov = true;

    friend bool operator==(const TrackFluents&, const TrackFluents&) = default;
  };

  /// Initial values at track birth: fully visible, not clipped, in view, not
  /// hidden by anything.
  void add_track(TrackId t) {
    if (!tracks_.emplace(t, TrackFluents{}).second) {
      throw std::logic_error("FluentStore: duplicate track " + to_string(t));
    }
  }

  void remove_track(TrackId t) {
    tracks_.erase(t);
    std::erase_if(hidden_, [t](const auto& p) { return p.first == t || p.second == t; });
  }

  bool contains(TrackId t) const { return tracks_.count(t) != 0; }

  // Direct writes for restoring a serialized state; the engine itself only
  // changes values through apply().
  void restore(TrackId t, const TrackFluents& values) { at(t) = values; }
  void restore_hidden_by(TrackId t1, TrackId t2, bool value) {
    at(t1);
    at(t2);
    if (value) hidden_.insert({t1, t2});
    else hidden_.erase({t1, t2});
  }
  const TrackFluents& values(TrackId t) const { return at(t); }

  std::vector<TrackId> tracks() const {
    std::vector<TrackId> out;
    out.reserve(tracks_.size());
    for (const auto& [id, _] : tracks_) out.push_back(id);
    return out;
  }

  Visibility visibility(TrackId t) const { return at(t).visibility; }
  bool clipped(TrackId t) const { return at(t).clipped; }
  bool in_fov(TrackId t) const { return at(t).in_fov; }
  bool hidden_by(TrackId t1, TrackId t2) const {
    at(t1);
    at(t2);
    return hidden_.count({t1, t2}) != 0;
  }

  /// Whether hidden_by(t, X) holds for some X.
  bool hidden_by_any(TrackId t) const {
    auto it = hidden_.lower_bound({t, TrackId{INT32_MIN}});
    return it != hidden_.end() && it->first == t;
  }

  /// Pairs (hidden, occluder) for which hidden_by holds.
  const std::set<std::pair<TrackId, TrackId>>& hidden_pairs() const { return hidden_; }

  FluentValue holds_at(const FluentInstance& f) const {
    switch (f.kind) {
      case FluentKind::visibility: return visibility(f.track);
      case FluentKind::clipped: return clipped(f.track);
      case FluentKind::in_fov: return in_fov(f.track);
      case FluentKind::hidden_by:
        if (!f.other) throw std::logic_error("hidden_by needs two tracks");
        return hidden_by(f.track, *f.other);
    }
    throw std::logic_error("unknown fluent kind");
  }

  /// Applies every effect of `e` at once. Detection-subject events other than
  /// noise must be rebound to a track before they reach the store.
  void apply(const EventOccurrence& e) {
    if (e.kind == EventKind::noise) return;
    const auto subject = e.subject_track();
    if (!subject) {
      throw std::logic_error("FluentStore: event on an unbound detection: " + event_term(e));
    }
    TrackFluents& f = at(*subject);
    switch (e.kind) {
      case EventKind::hides_behind:
        at(*e.other);
        f.visibility = Visibility::not_visible;
        hidden_.insert({*subject, *e.other});
        break;
      case EventKind::unhides_from_behind:
        at(*e.other);
        f.visibility = Visibility::fully_visible;
        hidden_.erase({*subject, *e.other});
        break;
      case EventKind::missing_detections: f.clipped = true; break;
      case EventKind::recover:
        f.clipped = false;
        if (f.visibility == Visibility::not_visible && !hidden_by_any(*subject))
          f.visibility = Visibility::fully_visible;
        break;
      case EventKind::leaves_fov: f.in_fov = false; break;
      case EventKind::enters_fov: f.in_fov = true; break;
      case EventKind::lost:
      case EventKind::noise: break;
    }
  }

  /// hidden_by(T1, T2) implies visibility(T1) = not_visible.
  bool consistent() const {
    return std::all_of(hidden_.begin(), hidden_.end(), [this](const auto& p) {
      auto it = tracks_.find(p.first);
      return it != tracks_.end() && it->second.visibility == Visibility::not_visible &&
             tracks_.count(p.second) != 0;
    });
  }

  friend bool operator==(const FluentStore&, const FluentStore&) = default;

 private:
  const TrackFluents& at(TrackId t) const {
    auto it = tracks_.find(t);
    if (it == tracks_.end()) throw std::logic_error("FluentStore: unknown track " + to_string(t));
    return it->second;
  }
  TrackFluents& at(TrackId t) {
    auto it = tracks_.find(t);
    if (it == tracks_.end()) throw std::logic_error("FluentStore: unknown track " + to_string(t));
    return it->second;
  }

  std::map<TrackId, TrackFluents> tracks_;
  std::set<std::pair<TrackId, TrackId>> hidden_;
};

inline FluentStore apply_event(FluentStore store, const EventOccurrence& e) {
  store.apply(e);
  return store;
}

/// Fluent instances an event writes; used to check that one frame's events
/// can be applied in any order.
inline std::vector<FluentInstance> touched_fluents(const EventOccurrence& e) {
  const auto t = e.subject_track();
  if (!t) return {};
  switch (e.kind) {
    case EventKind::hides_behind:
    case EventKind::unhides_from_behind:
      return {{FluentKind::visibility, *t, std::nullopt}, {FluentKind::hidden_by, *t, e.other}};
    case EventKind::missing_detections: return {{FluentKind::clipped, *t, std::nullopt}};
    case EventKind::recover:
      return {{FluentKind::clipped, *t, std::nullopt}, {FluentKind::visibility, *t, std::nullopt}};
    case EventKind::leaves_fov:
    case EventKind::enters_fov: return {{FluentKind::in_fov, *t, std::nullopt}};
    case EventKind::lost:
    case EventKind::noise: return {};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Event preconditions

// Geometry and lifecycle facts the preconditions consult. Predictions and
// detections must be sorted by id.
struct SceneView {
  std::span<const Prediction> predictions;
  std::span<const Detection> detections;
  std::optional<FrameGeometry> frame_geometry;
  double fov_margin = 0.0;
  int max_halted_age = 30;

  const Prediction* find(TrackId t) const {
    auto it = std::lower_bound(predictions.begin(), predictions.end(), t,
                               [](const Prediction& p, TrackId id) { return p.id < id; });
    return it != predictions.end() && it->id == t ? &*it : nullptr;
  }
  const Detection* find(DetectionId d) const {
    auto it = std::lower_bound(detections.begin(), detections.end(), d,
                               [](const Detection& x, DetectionId id) { return x.id < id; });
    return it != detections.end() && it->id == d ? &*it : nullptr;
  }

  bool at_border(const Prediction& p) const {
    return frame_geometry && frame_geometry->known() &&
           touches_border(p.box, *frame_geometry, fov_margin);
  }
};

/// Whether event `e` may occur in the current frame given the fluent values
/// before this frame's events and the scene geometry.
inline bool possible(const FluentStore& store, const SceneView& scene, const EventOccurrence& e) {
  if (const auto* det = std::get_if<DetectionId>(&e.subject)) {
    const Detection* d = scene.find(*det);
    if (!d) return false;
    if (e.kind == EventKind::noise) return true;
    if (e.kind == EventKind::enters_fov) {
      return !(scene.frame_geometry && scene.frame_geometry->known()) ||
             intersects_frame(d->box, *scene.frame_geometry);
    }
    return false;
  }

  const TrackId t = std::get<TrackId>(e.subject);
  const Prediction* p = scene.find(t);
  if (!p || !store.contains(t)) return false;

  switch (e.kind) {
    case EventKind::hides_behind: {
      if (!e.other || *e.other == t) return false;
      const Prediction* q = scene.find(*e.other);
      if (!q || !store.contains(*e.other)) return false;
      return overlapping_top(p->box, q->box) &&
             store.visibility(t) != Visibility::not_visible &&
             store.visibility(*e.other) != Visibility::not_visible;
    }
    case EventKind::unhides_from_behind: {
      if (!e.other || *e.other == t) return false;
      if (!scene.find(*e.other) || !store.contains(*e.other)) return false;
      // Only from the track it is actually hidden by; otherwise the stale
      // hidden_by pair would outlive the visibility change.
      return store.hidden_by(t, *e.other) && store.visibility(t) == Visibility::not_visible &&
             store.visibility(*e.other) != Visibility::not_visible;
    }
    case EventKind::missing_detections:
      return !store.clipped(t) && store.visibility(t) != Visibility::not_visible;
    // Also the way back for a hidden track whose occluder has ended.
    case EventKind::recover:
      return store.clipped(t) ||
             (store.visibility(t) == Visibility::not_visible && !store.hidden_by_any(t));
    case EventKind::leaves_fov: return scene.at_border(*p);
    case EventKind::lost:
      return p->state == TrackState::halted && p->frames_halted >= scene.max_halted_age &&
             !scene.at_border(*p);
    case EventKind::enters_fov: return false;  // only for started detections
    case EventKind::noise: return true;
  }
  return false;
}

}  // namespace abtrack
