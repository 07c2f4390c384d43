#pragma once

// Exhaustive reference solver for small instances. Enumerates every cover
// (one action per track, one per detection) and every event linking, and
// keeps the first strictly best objective in canonical enumeration order.
// Shares only the rule predicates with solve(), not its search.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "abtrack/abduction.hpp"

namespace abtrack {

inline SolveResult solve_oracle(ProblemSpec spec) {
  spec.normalize();
  if (spec.predictions.size() > 5 || spec.detections.size() > 5)
    throw std::invalid_argument("solve_oracle: instance larger than 5x5");

  const CandidateSet cand = candidate_actions(spec);
  const std::size_t nt = spec.predictions.size();
  const std::size_t nd = spec.detections.size();

  // Per-track options in canonical order: paired actions by detection id, then
  // halt, end, ignore_trk. Per-detection options: start, then ignore_det.
  auto rank = [](const Action& a) {
    switch (a.kind) {
      case ActionKind::halt: return 1;
      case ActionKind::end: return 2;
      case ActionKind::ignore_trk: return 3;
      default: return 0;
    }
  };
  std::vector<std::vector<Action>> track_opts;
  for (const auto& p : spec.predictions) {
    std::vector<Action> opts = cand.per_track.at(p.id);
    std::stable_sort(opts.begin(), opts.end(), [&](const Action& a, const Action& b) {
      if (rank(a) != rank(b)) return rank(a) < rank(b);
      if (a.detection && b.detection) return *a.detection < *b.detection;
      return false;
    });
    track_opts.push_back(std::move(opts));
  }
  std::vector<std::vector<Action>> det_opts;
  for (const auto& d : spec.detections) {
    std::vector<Action> opts;
    for (const Action& a : cand.per_detection.at(d.id))
      if (a.kind == ActionKind::start) opts.push_back(a);
    opts.push_back(Action::ignore_det(d.id));
    det_opts.push_back(std::move(opts));
  }

  std::optional<SolveResult> best;
  std::vector<Action> chosen;
  std::vector<char> det_taken(nd, 0);

  auto finish = [&] {
    SolveResult r;
    for (const Action& a : chosen) {
      LinkedAction la{a, std::nullopt};
      if (a.kind != ActionKind::assign) {
        const auto evs = link_events(a, spec);
        if (evs.empty()) return;  // unexplainable cover
        la.event = *std::min_element(evs.begin(), evs.end());
      }
      r.objective.add(a, spec);
      r.decisions.push_back(la);
    }
    if (!best || r.objective.better_than(best->objective)) best = std::move(r);
  };

  auto det_index = [&](DetectionId id) {
    for (std::size_t j = 0; j < nd; ++j)
      if (spec.detections[j].id == id) return j;
    throw std::logic_error("unknown detection");
  };

  std::function<void(std::size_t)> enum_dets = [&](std::size_t j) {
    if (j == nd) {
      finish();
      return;
    }
    if (det_taken[j]) {
      enum_dets(j + 1);
      return;
    }
    for (const Action& a : det_opts[j]) {
      chosen.push_back(a);
      enum_dets(j + 1);
      chosen.pop_back();
    }
  };

  std::function<void(std::size_t)> enum_tracks = [&](std::size_t i) {
    if (i == nt) {
      enum_dets(0);
      return;
    }
    for (const Action& a : track_opts[i]) {
      std::size_t j = nd;
      if (a.detection) {
        j = det_index(*a.detection);
        if (det_taken[j]) continue;
        det_taken[j] = 1;
      }
      chosen.push_back(a);
      enum_tracks(i + 1);
      chosen.pop_back();
      if (j < nd) det_taken[j] = 0;
    }
  };

  enum_tracks(0);
  if (!best) throw std::logic_error("solve_oracle: no consistent cover");
  return *best;
}

}  // namespace abtrack
