#pragma once

// Synthetic scenarios: ground-truth tracks on a grid of cells, detections
// derived from them with scripted occlusions and noise.
//
// Each track owns one grid cell and moves horizontally inside it, reflecting
// at the cell edges, so tracks never overlap on their own. Overlap episodes
// pull one track of a horizontally adjacent pair onto its neighbour; scripted
// occlusions shrink the target to 40% and move it inside the occluder, with
// linear ramps on both sides: at least 5 frames, longer when the target has
// far to go, so it never moves more than 15% of its width per frame. Exits send a track out through the
// nearer side border. All boxes are whole pixels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "abtrack/io.hpp"
#include "abtrack/metrics.hpp"

namespace abtrack {

struct ScriptedOcclusion {
  int occluder = 0;
  int target = 0;
  Frame start = 0;   // first frame without a detection of the target
  int duration = 1;  // frames without detections
};

struct TrackExit {
  int track = 0;
  Frame start = 0;  // first frame of the exit run
};

struct ScenarioConfig {
  int n_tracks = 10;
  int frames = 100;
  Frame first_frame = 0;
  // Target fraction of frames with at least one overlapping pair. Unset
  // leaves overlap to the scripted occlusions and exits alone.
  std::optional<double> overlap_fraction = 0.0;
  std::vector<ScriptedOcclusion> occlusions;
  std::vector<TrackExit> exits;
  double drop_probability = 0.0;
  double jitter_sigma = 0.0;  // px
  double spurious_rate = 0.0;  // probability of one spurious detection per frame
  double min_speed = 0.5;     // px/frame
  double max_speed = 3.0;
  double exit_speed = 8.0;
  std::uint64_t seed = 1;
  FrameGeometry frame_geom{1242.0, 375.0};
  std::string cls = "car";

  void validate() const {
    if (n_tracks < 0 || frames < 0) throw std::invalid_argument("n_tracks and frames must be non-negative");
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if ((overlap_fraction && !unit(*overlap_fraction)) || !unit(drop_probability) || !unit(spurious_rate))
      throw std::invalid_argument("rates must lie in [0, 1]");
    if (jitter_sigma < 0.0 || min_speed < 0.0 || max_speed < min_speed || exit_speed <= 0.0)
      throw std::invalid_argument("invalid speed or jitter");
    if (!frame_geom.known()) throw std::invalid_argument("frame geometry required");
    for (const auto& o : occlusions) {
      if (o.occluder < 0 || o.occluder >= n_tracks || o.target < 0 || o.target >= n_tracks ||
          o.occluder == o.target)
        throw std::invalid_argument("occlusion references an invalid track pair");
      if (o.duration < 1 || o.start < first_frame || o.start + o.duration > first_frame + frames)
        throw std::invalid_argument("occlusion outside the scenario");
    }
    for (const auto& e : exits)
      if (e.track < 0 || e.track >= n_tracks || e.start < first_frame)
        throw std::invalid_argument("exit references an invalid track");
  }
};

struct Scenario {
  DetectionStream detections;
  TrackSet ground_truth;
  double overlap_fraction = 0.0;  // measured
};

/// Fraction of frames in [first, first + frames) with two intersecting boxes.
inline double measure_overlap(const TrackSet& ts, Frame first, int frames) {
  if (frames <= 0) return 0.0;
  int hits = 0;
  for (Frame f = first; f < first + frames; ++f) {
    auto it = ts.frames.find(f);
    if (it == ts.frames.end()) continue;
    const auto& v = it->second;
    bool any = false;
    for (std::size_t i = 0; i < v.size() && !any; ++i)
      for (std::size_t j = i + 1; j < v.size() && !any; ++j)
        any = intersection_area(v[i].box, v[j].box) > 0.0;
    hits += any;
  }
  return static_cast<double>(hits) / frames;
}

/// Grid columns used to lay out `n_tracks` cells over the frame.
inline int grid_columns(const ScenarioConfig& cfg) {
  if (cfg.n_tracks <= 0) return 1;
  const double ratio = cfg.frame_geom.width / cfg.frame_geom.height;
  return std::max(1, static_cast<int>(std::ceil(std::sqrt(cfg.n_tracks * ratio))));
}

/// Tracks in horizontally adjacent cells, (left, right).
inline std::vector<std::pair<int, int>> neighbour_pairs(const ScenarioConfig& cfg) {
  const int cols = grid_columns(cfg);
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i + 1 < cfg.n_tracks; ++i)
    if ((i + 1) % cols != 0) out.emplace_back(i, i + 1);
  return out;
}

namespace detail {

struct Path {
  double cell_x0, cell_x1;  // horizontal extent available to the box
  double y, w, h;
  double x0, speed;  // speed signed
};

inline double reflect(double x0, double v, double t, double lo, double hi) {
  const double span = hi - lo;
  if (span <= 0.0) return lo;
  double p = std::fmod(x0 - lo + v * t, 2.0 * span);
  if (p < 0.0) p += 2.0 * span;
  return lo + (p <= span ? p : 2.0 * span - p);
}

struct Box {
  double x, y, w, h;
};

inline Box blend(const Box& a, const Box& b, double alpha) {
  return {a.x + (b.x - a.x) * alpha, a.y + (b.y - a.y) * alpha, a.w + (b.w - a.w) * alpha,
          a.h + (b.h - a.h) * alpha};
}

// 0 outside, linear ramps of `r` frames, 1 on [core_begin, core_end).
inline double ramp(double t, double core_begin, double core_end, double r) {
  const double up = (t - (core_begin - r)) / r;
  const double down = ((core_end - 1.0 + r) - t) / r;
  return std::clamp(std::min(up, down), 0.0, 1.0);
}

struct Episode {
  int a, b;  // b is pulled onto a
  double begin, end;
};

class Layout {
 public:
  Layout(const ScenarioConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
    const int n = cfg.n_tracks;
    if (n == 0) return;
    const double W = cfg.frame_geom.width, H = cfg.frame_geom.height;
    cols_ = grid_columns(cfg);
    rows_ = (n + cols_ - 1) / cols_;
    const double cw = W / cols_, ch = H / rows_;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      const int c = i % cols_, r = i / cols_;
      Path p{};
      p.w = std::max(2.0, std::round(cw * (0.35 + 0.2 * u01(rng))));
      p.h = std::max(2.0, std::round(ch * (0.5 + 0.2 * u01(rng))));
      p.cell_x0 = c * cw + 1.0;
      p.cell_x1 = (c + 1) * cw - 1.0 - p.w;
      p.y = std::round(r * ch + (ch - p.h) / 2.0);
      p.x0 = p.cell_x0 + u01(rng) * std::max(0.0, p.cell_x1 - p.cell_x0);
      const double speed = cfg.min_speed + (cfg.max_speed - cfg.min_speed) * u01(rng);
      p.speed = u01(rng) < 0.5 ? -speed : speed;
      paths_.push_back(p);
    }
  }

  double occlusion_ramp(const ScriptedOcclusion& o) const {
    const Box T = own(o.target, o.start), O = own(o.occluder, o.start);
    const double dist = std::hypot(O.x + O.w / 2.0 - (T.x + T.w / 2.0), O.y + O.h / 2.0 - (T.y + T.h / 2.0));
    return std::max(5.0, std::ceil(dist / (0.15 * T.w)));
  }

  std::vector<std::pair<int, int>> adjacent_pairs() const { return neighbour_pairs(cfg_); }

  Box own(int i, Frame f) const {
    const Path& p = paths_[i];
    const double t = static_cast<double>(f - cfg_.first_frame);
    return {reflect(p.x0, p.speed, t, p.cell_x0, std::max(p.cell_x0, p.cell_x1)), p.y, p.w, p.h};
  }

  // Ground-truth boxes for one frame before border clipping, by track.
  std::vector<Box> frame_boxes(Frame f, const std::vector<Episode>& episodes) const {
    std::vector<Box> boxes;
    for (int i = 0; i < cfg_.n_tracks; ++i) boxes.push_back(own(i, f));
    const double t = static_cast<double>(f);
    for (const auto& e : episodes) {
      const double a = ramp(t, e.begin, e.end, 5.0);
      if (a <= 0.0) continue;
      const Box& A = boxes[e.a];
      const Box target{A.x + A.w / 2.0, A.y, boxes[e.b].w, boxes[e.b].h};
      boxes[e.b] = blend(boxes[e.b], target, a);
    }
    for (const auto& o : cfg_.occlusions) {
      const double a = ramp(t, static_cast<double>(o.start), static_cast<double>(o.start + o.duration),
                            occlusion_ramp(o));
      if (a <= 0.0) continue;
      const Box& O = boxes[o.occluder];
      const Box& T = boxes[o.target];
      const double w = T.w * 0.4, h = T.h * 0.4;
      const Box inside{O.x + (O.w - w) / 2.0, O.y + (O.h - h) / 2.0, w, h};
      boxes[o.target] = blend(T, inside, a);
    }
    for (const auto& e : cfg_.exits) {
      if (f < e.start) continue;
      Box& b = boxes[e.track];
      const Box at_start = own(e.track, e.start);
      const double dir = at_start.x + at_start.w / 2.0 < cfg_.frame_geom.width / 2.0 ? -1.0 : 1.0;
      b.x = at_start.x + dir * cfg_.exit_speed * static_cast<double>(f - e.start);
    }
    return boxes;
  }

 private:
  const ScenarioConfig& cfg_;
  int cols_ = 1, rows_ = 1;
  std::vector<Path> paths_;
};

// Whole-pixel box clipped to the image, or nothing if less than a pixel remains.
inline std::optional<BBox2D> to_pixels(const Box& b, const FrameGeometry& g) {
  const double l = std::max(0.0, std::round(b.x)), t = std::max(0.0, std::round(b.y));
  const double r = std::min(g.width, std::round(b.x + b.w)), btm = std::min(g.height, std::round(b.y + b.h));
  if (r - l < 1.0 || btm - t < 1.0) return std::nullopt;
  return BBox2D(l, t, r - l, btm - t);
}

inline std::vector<Episode> plan_episodes(const ScenarioConfig& cfg, int overlap_frames,
                                          const std::vector<std::pair<int, int>>& pairs) {
  std::vector<Episode> out;
  if (overlap_frames <= 0 || pairs.empty()) return out;
  const int m = std::max(1, static_cast<int>(std::lround(overlap_frames / 15.0)));
  const double len = static_cast<double>(overlap_frames) / m;
  const double spacing = static_cast<double>(cfg.frames) / m;
  for (int j = 0; j < m; ++j) {
    const double centre = static_cast<double>(cfg.first_frame) + (j + 0.5) * spacing;
    const auto [a, b] = pairs[j % pairs.size()];
    out.push_back({a, b, std::round(centre - len / 2.0), std::round(centre + len / 2.0)});
  }
  return out;
}

}  // namespace detail

inline Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  detail::Layout layout(cfg, rng);

  auto build_gt = [&](const std::vector<detail::Episode>& episodes) {
    TrackSet gt;
    for (Frame f = cfg.first_frame; f < cfg.first_frame + cfg.frames; ++f) {
      const auto boxes = layout.frame_boxes(f, episodes);
      for (int i = 0; i < cfg.n_tracks; ++i)
        if (auto b = detail::to_pixels(boxes[i], cfg.frame_geom)) gt.add(f, i, *b);
    }
    return gt;
  };

  // Adjust the number of forced-overlap frames until the measured fraction
  // is within 5 percentage points of the target.
  std::vector<detail::Episode> episodes;
  TrackSet gt = build_gt(episodes);
  double measured = measure_overlap(gt, cfg.first_frame, cfg.frames);
  if (cfg.overlap_fraction && std::abs(measured - *cfg.overlap_fraction) > 0.05) {
    const double target = *cfg.overlap_fraction;
    const auto pairs = layout.adjacent_pairs();
    if (pairs.empty())
      throw std::invalid_argument("overlap fraction infeasible: no two tracks share a row");
    const int want = static_cast<int>(std::lround(target * cfg.frames));
    int k = want;
    double best_err = std::abs(measured - target);
    for (int iter = 0; iter < 40 && best_err > 0.05; ++iter) {
      auto trial = detail::plan_episodes(cfg, k, pairs);
      TrackSet g = build_gt(trial);
      const double m = measure_overlap(g, cfg.first_frame, cfg.frames);
      const double err = std::abs(m - target);
      if (err < best_err) {
        best_err = err;
        episodes = trial;
        gt = std::move(g);
        measured = m;
      }
      const int got = static_cast<int>(std::lround(m * cfg.frames));
      const int next = std::clamp(k + (want - got), 0, cfg.frames);
      k = next == k ? k + (want > got ? 1 : -1) : next;
      if (k < 0 || k > cfg.frames) break;
    }
    if (best_err > 0.05)
      throw std::invalid_argument("overlap fraction infeasible for this layout");
  }

  // Detections: drop scripted-occlusion frames, then noise.
  std::bernoulli_distribution drop(cfg.drop_probability);
  std::bernoulli_distribution spurious(cfg.spurious_rate);
  std::normal_distribution<double> jitter(0.0, cfg.jitter_sigma > 0.0 ? cfg.jitter_sigma : 1.0);
  std::uniform_int_distribution<int> conf_real(70, 99);
  std::uniform_int_distribution<int> conf_spurious(10, 90);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  Scenario sc;
  sc.detections.format = "synthetic";
  for (Frame f = cfg.first_frame; f < cfg.first_frame + cfg.frames; ++f) {
    FrameDetections fd{f, {}};
    auto add = [&](const std::string& cls, int conf, const BBox2D& b) {
      fd.detections.push_back({DetectionId{static_cast<std::int32_t>(fd.detections.size())}, cls, conf, b});
    };
    if (auto it = gt.frames.find(f); it != gt.frames.end()) {
      for (const auto& lb : it->second) {
        const bool hidden = std::any_of(cfg.occlusions.begin(), cfg.occlusions.end(), [&](const auto& o) {
          return o.target == lb.id && f >= o.start && f < o.start + o.duration;
        });
        if (hidden || drop(rng)) continue;
        BBox2D b = lb.box;
        if (cfg.jitter_sigma > 0.0) {
          const double dx = std::round(jitter(rng)), dy = std::round(jitter(rng));
          const double dw = std::round(jitter(rng)), dh = std::round(jitter(rng));
          b = BBox2D(b.x() + dx, b.y() + dy, std::max(1.0, b.w() + dw), std::max(1.0, b.h() + dh));
        }
        add(cfg.cls, conf_real(rng), b);
      }
    }
    if (spurious(rng)) {
      const double w = std::round(10.0 + 40.0 * u01(rng)), h = std::round(10.0 + 40.0 * u01(rng));
      const double x = std::round(u01(rng) * (cfg.frame_geom.width - w));
      const double y = std::round(u01(rng) * (cfg.frame_geom.height - h));
      add(cfg.cls, conf_spurious(rng), BBox2D(x, y, w, h));
    }
    sc.detections.frames.push_back(std::move(fd));
  }
  sc.ground_truth = std::move(gt);
  sc.overlap_fraction = measured;
  return sc;
}

/// MOT-format text for a detection stream (`frame,-1,x,y,w,h,conf`).
inline std::string write_mot_detections(const DetectionStream& s) {
  std::string out;
  for (const auto& fd : s.frames)
    for (const auto& d : fd.detections)
      out += std::to_string(fd.frame) + ",-1," + format_number(d.box.x()) + ',' + format_number(d.box.y()) +
             ',' + format_number(d.box.w()) + ',' + format_number(d.box.h()) + ',' +
             format_number(d.confidence / 100.0) + '\n';
  return out;
}

/// MOT-format text for a track set (`frame,id,x,y,w,h,1,-1,-1,-1`).
inline std::string write_mot_tracks(const TrackSet& ts) {
  std::string out;
  for (const auto& [f, boxes] : ts.frames)
    for (const auto& lb : boxes)
      out += std::to_string(f) + ',' + std::to_string(lb.id) + ',' + format_number(lb.box.x()) + ',' +
             format_number(lb.box.y()) + ',' + format_number(lb.box.w()) + ',' + format_number(lb.box.h()) +
             ",1,-1,-1,-1\n";
  return out;
}

}  // namespace abtrack
