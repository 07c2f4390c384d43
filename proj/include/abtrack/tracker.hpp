#pragma once

// Online tracking loop. Each step predicts every live track, builds the
// frame's problem, abduces the optimal hypothesis, applies its events to the
// fluent store, and updates track states and histories.

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "abtrack/abduction.hpp"
#include "abtrack/domain.hpp"
#include "abtrack/motion.hpp"

namespace abtrack {

struct EngineConfig {
  Thresholds thresholds;
  MotionNoise noise;
  std::optional<FrameGeometry> frame_geometry;
  int first_track_id = 0;
};

struct Explanation {
  std::vector<Track> tracks;               // by id
  std::vector<EventOccurrence> events;     // chronological
};

namespace detail {

inline BBox2D lerp(const BBox2D& a, const BBox2D& b, double t) {
  return BBox2D(a.x() + (b.x() - a.x()) * t, a.y() + (b.y() - a.y()) * t,
                a.w() + (b.w() - a.w()) * t, a.h() + (b.h() - a.h()) * t);
}

// Fills frames strictly between the last history entry and `frame`.
inline void backfill(Track& trk, Frame frame, const BBox2D& to) {
  if (trk.history.empty()) return;
  const HistoryEntry last = trk.history.back();
  const double span = static_cast<double>(frame - last.frame);
  for (Frame f = last.frame + 1; f < frame; ++f)
    trk.history.push_back({f, lerp(last.box, to, static_cast<double>(f - last.frame) / span),
                           Provenance::interpolated, 0});
}

inline void check_detections(const std::vector<Detection>& dets) {
  for (const auto& d : dets)
    if (d.confidence < 0 || d.confidence > 100)
      throw std::invalid_argument("confidence out of range for " + to_string(d.id));
}

}  // namespace detail

class Engine {
 public:
  explicit Engine(EngineConfig cfg = {}) : cfg_(std::move(cfg)), next_id_(cfg_.first_track_id) {
    cfg_.thresholds.validate();
  }

  /// Processes one frame. Frames must be strictly increasing; detection ids
  /// must be unique within the frame.
  SolveResult step(Frame frame, std::vector<Detection> detections) {
    if (finalized_) throw std::logic_error("Engine::step after finalize");
    if (last_frame_ && frame <= *last_frame_)
      throw std::invalid_argument("frame " + std::to_string(frame) +
                                  " not after previous frame " + std::to_string(*last_frame_));
    detail::check_detections(detections);

    ProblemSpec spec;
    spec.frame = frame;
    spec.detections = std::move(detections);
    spec.config = cfg_.thresholds;
    spec.frame_geometry = cfg_.frame_geometry;
    spec.fluents = fluents_;
    for (auto& trk : tracks_) {
      if (!trk.live()) continue;
      trk.predicted = trk.filter.predict();
      const int halted = trk.state == TrackState::halted ? static_cast<int>(frame - trk.halted_since) : 0;
      spec.predictions.push_back({trk.id, trk.cls, trk.state, trk.predicted, halted});
    }
    spec.compute_likelihoods();
    spec.normalize();

    SolveResult result = solve(spec);
    last_problem_ = spec;
    apply(frame, spec, result);
    last_frame_ = frame;
    return result;
  }

  /// Closes every live track and returns the explanation. Idempotent.
  const Explanation& finalize() {
    if (!finalized_) {
      for (auto& trk : tracks_)
        if (trk.live()) trk.state = TrackState::ended;
      explanation_.tracks = tracks_;
      explanation_.events = events_;
      finalized_ = true;
    }
    return explanation_;
  }

  const std::vector<Track>& tracks() const { return tracks_; }
  const std::vector<EventOccurrence>& events() const { return events_; }
  const FluentStore& fluents() const { return fluents_; }
  const EngineConfig& config() const { return cfg_; }
  std::optional<Frame> current_frame() const { return last_frame_; }
  /// The problem solved by the most recent step.
  const std::optional<ProblemSpec>& last_problem() const { return last_problem_; }

  const Track* find(TrackId id) const {
    auto it = std::lower_bound(tracks_.begin(), tracks_.end(), id,
                               [](const Track& t, TrackId v) { return t.id < v; });
    return it != tracks_.end() && it->id == id ? &*it : nullptr;
  }

 private:
  Track& at(TrackId id) { return const_cast<Track&>(*find(id)); }

  void apply(Frame frame, const ProblemSpec& spec, SolveResult& result) {
    const SceneView scene = spec.scene();
    std::vector<TrackId> ended;

    for (auto& dec : result.decisions) {
      const Action& a = dec.action;
      switch (a.kind) {
        case ActionKind::assign: {
          Track& trk = at(*a.track);
          const Detection& d = *scene.find(*a.detection);
          trk.filter.update(d.box);
          trk.history.push_back({frame, d.box, Provenance::observed, d.confidence});
          break;
        }
        case ActionKind::resume: {
          Track& trk = at(*a.track);
          const Detection& d = *scene.find(*a.detection);
          detail::backfill(trk, frame, d.box);
          trk.filter.update(d.box);
          trk.history.push_back({frame, d.box, Provenance::observed, d.confidence});
          trk.state = TrackState::active;
          break;
        }
        case ActionKind::halt: {
          Track& trk = at(*a.track);
          trk.state = TrackState::halted;
          trk.halted_since = frame;
          break;
        }
        case ActionKind::end:
          at(*a.track).state = TrackState::ended;
          ended.push_back(*a.track);
          break;
        case ActionKind::start: {
          const Detection& d = *scene.find(*a.detection);
          const TrackId id{next_id_++};
          Track trk(id, d.cls, d.box, cfg_.noise);
          trk.history.push_back({frame, d.box, Provenance::observed, d.confidence});
          tracks_.push_back(std::move(trk));
          fluents_.add_track(id);
          dec.event->subject = id;  // enters_fov of the new track
          break;
        }
        case ActionKind::ignore_trk:
        case ActionKind::ignore_det: break;
      }
    }

    for (const auto& dec : result.decisions) {
      if (!dec.event) continue;
      fluents_.apply(*dec.event);
      events_.push_back(*dec.event);
    }
    for (TrackId id : ended) fluents_.remove_track(id);
    if (!fluents_.consistent()) throw std::logic_error("fluent store inconsistent after frame");
  }

  EngineConfig cfg_;
  std::int32_t next_id_;
  std::vector<Track> tracks_;  // ids increasing
  std::vector<EventOccurrence> events_;
  FluentStore fluents_;
  std::optional<Frame> last_frame_;
  std::optional<ProblemSpec> last_problem_;
  Explanation explanation_;
  bool finalized_ = false;
};

/// Frame-by-frame IoU tracker without abduction: greedy best-IoU matching,
/// unmatched tracks end at once, unmatched detections start new tracks.
class BaselineTracker {
 public:
  explicit BaselineTracker(EngineConfig cfg = {}) : cfg_(std::move(cfg)), next_id_(cfg_.first_track_id) {}

  void step(Frame frame, const std::vector<Detection>& detections) {
    if (last_frame_ && frame <= *last_frame_) throw std::invalid_argument("frames must increase");
    last_frame_ = frame;
    const Thresholds& th = cfg_.thresholds;

    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < tracks_.size(); ++i)
      if (tracks_[i].live()) {
        tracks_[i].predicted = tracks_[i].filter.predict();
        live.push_back(i);
      }

    struct Pair {
      double iou;
      std::size_t trk, det;
    };
    std::vector<Pair> pairs;
    for (std::size_t i : live)
      for (std::size_t j = 0; j < detections.size(); ++j) {
        const auto& d = detections[j];
        if (!match_type(tracks_[i].cls, d.cls, th) || d.confidence <= th.conf_thresh_assign) continue;
        const double v = iou(tracks_[i].predicted, d.box);
        if (v > th.iou_thresh) pairs.push_back({v, i, j});
      }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.iou > b.iou; });

    std::vector<char> trk_used(tracks_.size(), 0), det_used(detections.size(), 0);
    for (const auto& p : pairs) {
      if (trk_used[p.trk] || det_used[p.det]) continue;
      trk_used[p.trk] = det_used[p.det] = 1;
      Track& trk = tracks_[p.trk];
      const auto& d = detections[p.det];
      trk.filter.update(d.box);
      trk.history.push_back({frame, d.box, Provenance::observed, d.confidence});
    }
    for (std::size_t i : live)
      if (!trk_used[i]) tracks_[i].state = TrackState::ended;
    for (std::size_t j = 0; j < detections.size(); ++j) {
      const auto& d = detections[j];
      if (det_used[j] || d.confidence <= th.conf_thresh_new_track || d.box.area() <= th.size_threshold)
        continue;
      Track trk(TrackId{next_id_++}, d.cls, d.box, cfg_.noise);
      trk.history.push_back({frame, d.box, Provenance::observed, d.confidence});
      tracks_.push_back(std::move(trk));
    }
  }

  Explanation finalize() {
    Explanation exp;
    exp.tracks = tracks_;
    for (auto& t : exp.tracks) t.state = TrackState::ended;
    return exp;
  }

 private:
  EngineConfig cfg_;
  std::int32_t next_id_;
  std::vector<Track> tracks_;
  std::optional<Frame> last_frame_;
};

}  // namespace abtrack
