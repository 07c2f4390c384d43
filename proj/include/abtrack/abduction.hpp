#pragma once

// Per-frame abduction: choose one assignment action per track and per
// detection, each non-assign action explained by an event occurrence, so that
// the lexicographic objective is optimal.
//
// Objective levels, most important first:
//   level 10  maximise  sum(scaled IoU + 1) over assign(T, D)
//   level 3   minimise  10 * (#ignore_det + #ignore_trk)
//   level 2   minimise  5 * (#end + #start) + #resume
//
// Among optimal covers the solver returns the canonical one: tracks are
// compared in increasing id order, a track paired with a lower detection id
// wins, and each action takes the first explaining event in the fixed event
// preference order (see link_events).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "abtrack/assignment.hpp"
#include "abtrack/domain.hpp"
#include "abtrack/geometry.hpp"

namespace abtrack {

struct Thresholds {
  double iou_thresh = 0.3;
  int conf_thresh_assign = 30;
  int conf_thresh_resume = 50;
  int conf_thresh_new_track = 50;
  double size_threshold = 100.0;  // px^2
  int max_halted_age = 30;
  int anticipation_threshold = 20;
  double fov_margin = 2.0;  // px
  // Resume gate: the detection centre must lie within resume_gate predicted-box
  // diagonals of the halted track, or overlap the track's occluder. <= 0
  // disables the gate.
  double resume_gate = 1.5;
  // Extra symmetric class pairs accepted by match_type besides identity.
  std::vector<std::pair<std::string, std::string>> class_aliases;

  void validate() const {
    if (!(iou_thresh >= 0.0 && iou_thresh < 1.0))
      throw std::invalid_argument("iou_thresh must be in [0, 1)");
    if (conf_thresh_assign < 0 || conf_thresh_resume < 0 || conf_thresh_new_track < 0)
      throw std::invalid_argument("confidence thresholds must be non-negative");
    if (size_threshold < 0.0 || max_halted_age < 0 || anticipation_threshold < 0 ||
        fov_margin < 0.0)
      throw std::invalid_argument("thresholds must be non-negative");
  }
};

inline bool match_type(const std::string& track_cls, const std::string& det_cls,
                       const Thresholds& cfg) {
  if (track_cls == det_cls) return true;
  return std::any_of(cfg.class_aliases.begin(), cfg.class_aliases.end(), [&](const auto& p) {
    return (p.first == track_cls && p.second == det_cls) ||
           (p.first == det_cls && p.second == track_cls);
  });
}

// ---------------------------------------------------------------------------
// Problem specification

struct ProblemSpec {
  Frame frame = 0;
  std::vector<Detection> detections;    // VO_t
  std::vector<Prediction> predictions;  // P_t
  std::map<std::pair<TrackId, DetectionId>, int> likelihoods;  // ML_t, IoU x 100000, > 0 only
  FluentStore fluents;
  Thresholds config;
  std::optional<FrameGeometry> frame_geometry;

  /// Sorts by id and checks the structural invariants.
  void normalize() {
    std::sort(detections.begin(), detections.end(),
              [](const Detection& a, const Detection& b) { return a.id < b.id; });
    std::sort(predictions.begin(), predictions.end(),
              [](const Prediction& a, const Prediction& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < detections.size(); ++i)
      if (detections[i].id == detections[i - 1].id)
        throw std::invalid_argument("duplicate detection " + to_string(detections[i].id));
    for (std::size_t i = 1; i < predictions.size(); ++i)
      if (predictions[i].id == predictions[i - 1].id)
        throw std::invalid_argument("duplicate track " + to_string(predictions[i].id));
    for (const auto& d : detections)
      if (d.confidence < 0 || d.confidence > 100)
        throw std::invalid_argument("confidence out of range for " + to_string(d.id));
    for (const auto& p : predictions) {
      if (p.state == TrackState::ended)
        throw std::invalid_argument("ended track in problem: " + to_string(p.id));
      if (!fluents.contains(p.id)) fluents.add_track(p.id);
    }
    std::erase_if(likelihoods, [](const auto& kv) { return kv.second <= 0; });
    config.validate();
  }

  /// Fills ML_t from the predicted and detected boxes.
  void compute_likelihoods() {
    likelihoods.clear();
    for (const auto& p : predictions)
      for (const auto& d : detections)
        if (int ml = scaled_iou(p.box, d.box); ml > 0) likelihoods[{p.id, d.id}] = ml;
  }

  int likelihood(TrackId t, DetectionId d) const {
    auto it = likelihoods.find({t, d});
    return it == likelihoods.end() ? 0 : it->second;
  }

  SceneView scene() const {
    return {predictions, detections, frame_geometry, config.fov_margin, config.max_halted_age};
  }
};

// ---------------------------------------------------------------------------
// Actions

enum class ActionKind { assign, resume, halt, end, ignore_trk, start, ignore_det };

inline std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::assign: return "assign";
    case ActionKind::resume: return "resume";
    case ActionKind::halt: return "halt";
    case ActionKind::end: return "end";
    case ActionKind::ignore_trk: return "ignore_trk";
    case ActionKind::start: return "start";
    case ActionKind::ignore_det: return "ignore_det";
  }
  return "?";
}

struct Action {
  ActionKind kind = ActionKind::halt;
  std::optional<TrackId> track;
  std::optional<DetectionId> detection;

  friend auto operator<=>(const Action&, const Action&) = default;

  static Action assign(TrackId t, DetectionId d) { return {ActionKind::assign, t, d}; }
  static Action resume(TrackId t, DetectionId d) { return {ActionKind::resume, t, d}; }
  static Action halt(TrackId t) { return {ActionKind::halt, t, std::nullopt}; }
  static Action end(TrackId t) { return {ActionKind::end, t, std::nullopt}; }
  static Action ignore_trk(TrackId t) { return {ActionKind::ignore_trk, t, std::nullopt}; }
  static Action start(DetectionId d) { return {ActionKind::start, std::nullopt, d}; }
  static Action ignore_det(DetectionId d) { return {ActionKind::ignore_det, std::nullopt, d}; }
};

/// `assign(trk_15,det_0)`, `halt(trk_13)`
inline std::string to_string(const Action& a) {
  std::string s(to_string(a.kind));
  s += '(';
  if (a.track) s += to_string(*a.track);
  if (a.track && a.detection) s += ',';
  if (a.detection) s += to_string(*a.detection);
  s += ')';
  return s;
}

struct Objective {
  std::int64_t level10 = 0;  // maximised
  std::int64_t level3 = 0;   // minimised
  std::int64_t level2 = 0;   // minimised

  friend bool operator==(const Objective&, const Objective&) = default;

  /// Strictly better in lexicographic order.
  bool better_than(const Objective& o) const {
    if (level10 != o.level10) return level10 > o.level10;
    if (level3 != o.level3) return level3 < o.level3;
    return level2 < o.level2;
  }

  void add(const Action& a, const ProblemSpec& spec) {
    switch (a.kind) {
      case ActionKind::assign: level10 += spec.likelihood(*a.track, *a.detection) + 1; break;
      case ActionKind::ignore_det:
      case ActionKind::ignore_trk: level3 += 10; break;
      case ActionKind::end:
      case ActionKind::start: level2 += 5; break;
      case ActionKind::resume: level2 += 1; break;
      case ActionKind::halt: break;
    }
  }
};

struct LinkedAction {
  Action action;
  std::optional<EventOccurrence> event;  // empty only for assign

  friend bool operator==(const LinkedAction&, const LinkedAction&) = default;
};

struct SolveResult {
  // Track actions in increasing track id, then detection-only actions in
  // increasing detection id.
  std::vector<LinkedAction> decisions;
  Objective objective;

  std::vector<Action> actions() const {
    std::vector<Action> out;
    for (const auto& d : decisions) out.push_back(d.action);
    return out;
  }
  std::vector<EventOccurrence> events() const {
    std::vector<EventOccurrence> out;
    for (const auto& d : decisions)
      if (d.event) out.push_back(*d.event);
    return out;
  }

  friend bool operator==(const SolveResult&, const SolveResult&) = default;
};

// ---------------------------------------------------------------------------
// Candidate generation (choice rules + integrity constraints)

struct CandidateSet {
  std::map<TrackId, std::vector<Action>> per_track;
  std::map<DetectionId, std::vector<Action>> per_detection;
};

namespace detail {

inline bool resume_gate_ok(const ProblemSpec& spec, const Prediction& p, const Detection& d) {
  const double gate = spec.config.resume_gate;
  if (gate <= 0.0) return true;
  const Point2D a = p.box.center();
  const Point2D b = d.box.center();
  const double diag = std::hypot(p.box.w(), p.box.h());
  if (std::hypot(a.x - b.x, a.y - b.y) <= gate * diag) return true;
  for (const auto& [hidden, occluder] : spec.fluents.hidden_pairs()) {
    if (hidden != p.id) continue;
    if (const Prediction* q = spec.scene().find(occluder);
        q && intersection_area(q->box, d.box) > 0.0)
      return true;
  }
  return false;
}

inline bool assignable(const ProblemSpec& spec, const Prediction& p, const Detection& d) {
  return p.state == TrackState::active && match_type(p.cls, d.cls, spec.config) &&
         d.confidence > spec.config.conf_thresh_assign &&
         static_cast<double>(spec.likelihood(p.id, d.id)) / 100000.0 > spec.config.iou_thresh;
}

inline bool resumable(const ProblemSpec& spec, const Prediction& p, const Detection& d) {
  return p.state == TrackState::halted && match_type(p.cls, d.cls, spec.config) &&
         d.confidence > spec.config.conf_thresh_resume && resume_gate_ok(spec, p, d);
}

inline bool startable(const ProblemSpec& spec, const Detection& d) {
  return d.confidence > spec.config.conf_thresh_new_track &&
         d.box.area() > spec.config.size_threshold;
}

}  // namespace detail

/// Actions allowed by the choice rules and integrity constraints, before
/// checking that an explaining event exists.
inline CandidateSet candidate_actions(const ProblemSpec& spec) {
  CandidateSet out;
  for (const auto& p : spec.predictions) {
    auto& acts = out.per_track[p.id];
    for (const auto& d : spec.detections) {
      if (detail::assignable(spec, p, d)) acts.push_back(Action::assign(p.id, d.id));
      if (detail::resumable(spec, p, d)) acts.push_back(Action::resume(p.id, d.id));
    }
    if (p.state == TrackState::active) {
      acts.push_back(Action::halt(p.id));
    } else {
      acts.push_back(Action::end(p.id));
      acts.push_back(Action::ignore_trk(p.id));
    }
  }
  for (const auto& d : spec.detections) {
    auto& acts = out.per_detection[d.id];
    for (const auto& p : spec.predictions) {
      if (detail::assignable(spec, p, d)) acts.push_back(Action::assign(p.id, d.id));
      if (detail::resumable(spec, p, d)) acts.push_back(Action::resume(p.id, d.id));
    }
    if (detail::startable(spec, d)) acts.push_back(Action::start(d.id));
    acts.push_back(Action::ignore_det(d.id));
  }
  return out;
}

/// Explaining events admissible for `a`, in preference order. Empty for
/// assign (which needs none) and for unexplainable actions.
inline std::vector<EventOccurrence> link_events(const Action& a, const ProblemSpec& spec) {
  std::vector<EventOccurrence> out;
  const SceneView scene = spec.scene();
  auto push_if = [&](EventOccurrence e) {
    if (possible(spec.fluents, scene, e)) out.push_back(e);
  };
  const Frame t = spec.frame;
  switch (a.kind) {
    case ActionKind::assign: break;
    case ActionKind::halt:
      for (const auto& q : spec.predictions)
        if (q.id != *a.track)
          push_if(make_event(EventKind::hides_behind, *a.track, t, q.id));
      push_if(make_event(EventKind::missing_detections, *a.track, t));
      break;
    case ActionKind::resume:
      for (const auto& [hidden, occluder] : spec.fluents.hidden_pairs())
        if (hidden == *a.track)
          push_if(make_event(EventKind::unhides_from_behind, *a.track, t, occluder));
      push_if(make_event(EventKind::recover, *a.track, t));
      break;
    case ActionKind::start: push_if(make_event(EventKind::enters_fov, *a.detection, t)); break;
    case ActionKind::end:
      push_if(make_event(EventKind::leaves_fov, *a.track, t));
      push_if(make_event(EventKind::lost, *a.track, t));
      break;
    case ActionKind::ignore_trk: push_if(make_event(EventKind::noise, *a.track, t)); break;
    case ActionKind::ignore_det: push_if(make_event(EventKind::noise, *a.detection, t)); break;
  }
  return out;
}

inline bool explainable(const Action& a, const ProblemSpec& spec) {
  return a.kind == ActionKind::assign || !link_events(a, spec).empty();
}

/// Candidate actions that also have an explaining event.
inline CandidateSet admissible_actions(const ProblemSpec& spec) {
  CandidateSet out = candidate_actions(spec);
  for (auto& [_, acts] : out.per_track)
    std::erase_if(acts, [&](const Action& a) { return !explainable(a, spec); });
  for (auto& [_, acts] : out.per_detection)
    std::erase_if(acts, [&](const Action& a) { return !explainable(a, spec); });
  return out;
}

// ---------------------------------------------------------------------------
// Solver

namespace detail {

using Cost = LexCost<3>;  // (-level10, level3, level2), minimised

inline Cost action_cost(const Action& a, const ProblemSpec& spec) {
  Objective o;
  o.add(a, spec);
  return Cost{{-o.level10, o.level3, o.level2}};
}

struct Pairing {
  int det_index;  // into the component's detection list
  Action action;
  Cost cost;
};

struct TrackNode {
  const Prediction* prediction;
  std::vector<Pairing> pairings;      // sorted by detection id
  std::optional<Action> unmatched;    // halt, end or ignore_trk
  Cost unmatched_cost;
};

struct DetNode {
  const Detection* detection;
  Action unmatched;  // start or ignore_det
  Cost unmatched_cost;
};

// Hungarian over the given rows and a subset of detections. Returns per-row
// pairing index (or -1 for unmatched) and total cost, or nullopt if
// infeasible. Costs are relative to leaving every detection unmatched.
inline std::optional<std::pair<std::vector<int>, Cost>> best_completion(
    const std::vector<TrackNode>& tracks, const std::vector<DetNode>& dets,
    const std::vector<int>& rows, const std::vector<char>& det_free) {
  std::vector<int> cols;  // detection indices available
  for (int j = 0; j < static_cast<int>(dets.size()); ++j)
    if (det_free[j]) cols.push_back(j);
  std::vector<int> col_of_det(dets.size(), -1);
  for (int c = 0; c < static_cast<int>(cols.size()); ++c) col_of_det[cols[c]] = c;

  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(cols.size()) + n;
  // pair_at[r][c] = pairing index of row r with column c, or -1
  std::vector<std::vector<int>> pair_at(n, std::vector<int>(cols.size(), -1));
  for (int r = 0; r < n; ++r) {
    const auto& node = tracks[rows[r]];
    for (int k = 0; k < static_cast<int>(node.pairings.size()); ++k)
      if (int c = col_of_det[node.pairings[k].det_index]; c >= 0) pair_at[r][c] = k;
  }
  const int ndet = static_cast<int>(cols.size());
  auto cost = [&](int r, int c) -> std::optional<Cost> {
    const auto& node = tracks[rows[r]];
    if (c < ndet) {
      const int k = pair_at[r][c];
      if (k < 0) return std::nullopt;
      return node.pairings[k].cost - dets[cols[c]].unmatched_cost;
    }
    if (!node.unmatched) return std::nullopt;
    return node.unmatched_cost;
  };
  auto assignment = min_cost_assignment<Cost>(n, m, cost);
  if (!assignment) return std::nullopt;
  std::vector<int> choice(n, -1);
  Cost total{};
  for (int r = 0; r < n; ++r) {
    const int c = (*assignment)[r];
    const auto cc = cost(r, c);
    total += *cc;
    choice[r] = c < ndet ? pair_at[r][c] : -1;
  }
  return std::pair{choice, total};
}

inline Action first_choice_action(const TrackNode& node, int pairing) {
  return pairing >= 0 ? node.pairings[pairing].action : *node.unmatched;
}

}  // namespace detail

/// Lexicographically optimal, canonically tie-broken hypothesis for one frame.
inline SolveResult solve(ProblemSpec spec) {
  spec.normalize();
  const CandidateSet adm = admissible_actions(spec);

  std::map<DetectionId, int> det_index;
  std::vector<detail::DetNode> dets;
  for (const auto& d : spec.detections) {
    const auto& acts = adm.per_detection.at(d.id);
    const bool can_start = std::any_of(acts.begin(), acts.end(), [](const Action& a) {
      return a.kind == ActionKind::start;
    });
    const Action un = can_start ? Action::start(d.id) : Action::ignore_det(d.id);
    det_index[d.id] = static_cast<int>(dets.size());
    dets.push_back({&d, un, detail::action_cost(un, spec)});
  }

  std::vector<detail::TrackNode> tracks;
  for (const auto& p : spec.predictions) {
    detail::TrackNode node{&p, {}, std::nullopt, {}};
    for (const Action& a : adm.per_track.at(p.id)) {
      if (a.detection) {
        node.pairings.push_back({det_index.at(*a.detection), a, detail::action_cost(a, spec)});
      } else {
        const auto c = detail::action_cost(a, spec);
        if (!node.unmatched || c < node.unmatched_cost) {
          node.unmatched = a;
          node.unmatched_cost = c;
        }
      }
    }
    std::sort(node.pairings.begin(), node.pairings.end(),
              [](const auto& a, const auto& b) { return a.det_index < b.det_index; });
    if (node.pairings.empty() && !node.unmatched)
      throw std::logic_error("no admissible action for " + to_string(p.id));
    tracks.push_back(std::move(node));
  }

  // Connected components of the track/detection pairing graph are solved
  // independently; the canonical order decomposes across them.
  const int nt = static_cast<int>(tracks.size());
  const int nd = static_cast<int>(dets.size());
  std::vector<int> parent(nt + nd);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (int i = 0; i < nt; ++i)
    for (const auto& pr : tracks[i].pairings) parent[find(i)] = find(nt + pr.det_index);

  std::vector<int> track_choice(nt, -1);
  std::vector<char> det_used(nd, 0);
  std::map<int, std::vector<int>> components;
  for (int i = 0; i < nt; ++i) components[find(i)].push_back(i);

  for (auto& [_, rows] : components) {
    std::vector<char> free(nd, 0);
    for (int r : rows)
      for (const auto& pr : tracks[r].pairings) free[pr.det_index] = 1;

    auto best = detail::best_completion(tracks, dets, rows, free);
    if (!best) throw std::logic_error("abduction: no consistent cover");
    const detail::Cost target = best->second;
    std::vector<int> current = best->first;
    detail::Cost fixed{};

    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& node = tracks[rows[r]];
      // Options in canonical order: pairings by detection id, then unmatched.
      std::vector<int> options;
      for (int k = 0; k < static_cast<int>(node.pairings.size()); ++k)
        if (free[node.pairings[k].det_index]) options.push_back(k);
      if (node.unmatched) options.push_back(-1);

      std::vector<int> rest(rows.begin() + static_cast<long>(r) + 1, rows.end());
      for (int opt : options) {
        if (opt == current[r]) break;
        detail::Cost here = opt >= 0 ? node.pairings[opt].cost - dets[node.pairings[opt].det_index].unmatched_cost
                                     : node.unmatched_cost;
        std::vector<char> trial_free = free;
        if (opt >= 0) trial_free[node.pairings[opt].det_index] = 0;
        auto sub = detail::best_completion(tracks, dets, rest, trial_free);
        if (sub && fixed + here + sub->second == target) {
          current[r] = opt;
          std::copy(sub->first.begin(), sub->first.end(), current.begin() + static_cast<long>(r) + 1);
          break;
        }
      }
      const int chosen = current[r];
      if (chosen >= 0) {
        free[node.pairings[chosen].det_index] = 0;
        fixed += node.pairings[chosen].cost - dets[node.pairings[chosen].det_index].unmatched_cost;
      } else {
        fixed += node.unmatched_cost;
      }
      track_choice[rows[r]] = chosen;
    }
  }

  SolveResult result;
  for (int i = 0; i < nt; ++i) {
    const Action a = detail::first_choice_action(tracks[i], track_choice[i]);
    if (track_choice[i] >= 0) det_used[tracks[i].pairings[track_choice[i]].det_index] = 1;
    result.decisions.push_back({a, std::nullopt});
  }
  for (int j = 0; j < nd; ++j)
    if (!det_used[j]) result.decisions.push_back({dets[j].unmatched, std::nullopt});

  for (auto& dec : result.decisions) {
    result.objective.add(dec.action, spec);
    if (dec.action.kind == ActionKind::assign) continue;
    auto evs = link_events(dec.action, spec);
    if (evs.empty()) throw std::logic_error("unexplained action " + to_string(dec.action));
    dec.event = evs.front();
  }
  return result;
}

}  // namespace abtrack
