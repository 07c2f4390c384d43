#pragma once

// CLEAR-MOT evaluation.
//
// Per frame, ground-truth objects keep last frame's hypothesis when the pair
// still overlaps by at least match_iou; the rest are matched by a minimum-cost
// assignment that first maximises the number of matches, then the total IoU.
// An identity switch is counted when an object is matched to a hypothesis
// other than the one it was last matched to. MOTP is the mean IoU of matched
// pairs, in percent.

#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "abtrack/assignment.hpp"
#include "abtrack/geometry.hpp"
#include "abtrack/tracker.hpp"

namespace abtrack {

struct LabeledBox {
  int id = 0;
  BBox2D box;
};

// Boxes per frame with object identities; the common form of ground truth and
// tracker output.
struct TrackSet {
  std::map<Frame, std::vector<LabeledBox>> frames;

  void add(Frame f, int id, const BBox2D& b) { frames[f].push_back({id, b}); }
  std::size_t box_count() const {
    std::size_t n = 0;
    for (const auto& [_, v] : frames) n += v.size();
    return n;
  }
};

inline TrackSet to_track_set(const Explanation& exp) {
  TrackSet ts;
  for (const auto& t : exp.tracks)
    for (const auto& h : t.history) ts.add(h.frame, raw(t.id), h.box);
  return ts;
}

struct FrameLog {
  Frame frame = 0;
  std::vector<std::pair<int, int>> matches;  // (gt id, hyp id)
  std::vector<int> false_negatives;          // gt ids
  std::vector<int> false_positives;          // hyp ids
  std::vector<int> id_switches;              // gt ids
};

struct EvalReport {
  double mota = 0.0;  // percent
  double motp = 0.0;  // percent
  double mt = 0.0;    // percent of gt tracks
  double ml = 0.0;    // percent of gt tracks
  long fp = 0, fn = 0, idsw = 0, frag = 0;
  long gt_boxes = 0, matches = 0;
  long gt_tracks = 0, mostly_tracked = 0, mostly_lost = 0;
  std::vector<FrameLog> log;
};

inline EvalReport evaluate(const TrackSet& gt, const TrackSet& hyp, double match_iou = 0.5) {
  if (!(match_iou > 0.0 && match_iou <= 1.0)) throw std::invalid_argument("match_iou must be in (0, 1]");
  if (gt.frames.empty()) throw std::invalid_argument("evaluate: empty ground truth");
  const Frame lo = gt.frames.begin()->first;
  const Frame hi = gt.frames.rbegin()->first;
  for (const auto& [f, boxes] : hyp.frames)
    if (!boxes.empty() && (f < lo || f > hi))
      throw std::invalid_argument("evaluate: hypothesis frame " + std::to_string(f) +
                                  " outside ground-truth range [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");

  EvalReport r;
  std::map<int, int> last_match;    // gt id -> hyp id
  std::map<int, int> seen, covered;  // gt id -> frames present / matched
  std::map<int, bool> tracked_prev, ever_tracked;
  double iou_sum = 0.0;

  std::set<Frame> frames;
  for (const auto& [f, _] : gt.frames) frames.insert(f);
  for (const auto& [f, _] : hyp.frames) frames.insert(f);
  static const std::vector<LabeledBox> kNone;

  for (Frame f : frames) {
    auto gi = gt.frames.find(f);
    auto hi_ = hyp.frames.find(f);
    const auto& g = gi == gt.frames.end() ? kNone : gi->second;
    const auto& h = hi_ == hyp.frames.end() ? kNone : hi_->second;
    FrameLog fl{f, {}, {}, {}, {}};

    std::vector<int> g_match(g.size(), -1);
    std::vector<char> h_used(h.size(), 0);

    // Keep still-valid correspondences from earlier frames.
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto lm = last_match.find(g[i].id);
      if (lm == last_match.end()) continue;
      for (std::size_t j = 0; j < h.size(); ++j)
        if (!h_used[j] && h[j].id == lm->second && iou(g[i].box, h[j].box) >= match_iou) {
          g_match[i] = static_cast<int>(j);
          h_used[j] = 1;
          break;
        }
    }

    std::vector<int> rows, cols;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g_match[i] < 0) rows.push_back(static_cast<int>(i));
    for (std::size_t j = 0; j < h.size(); ++j)
      if (!h_used[j]) cols.push_back(static_cast<int>(j));
    if (!rows.empty() && !cols.empty()) {
      // Cost (unmatched count, 1 - IoU in 1e-9 units); one dummy column per row.
      using C = LexCost<2>;
      const int nr = static_cast<int>(rows.size());
      const int nc = static_cast<int>(cols.size());
      auto cost = [&](int r, int c) -> std::optional<C> {
        if (c >= nc) return C{{1, 0}};
        const double v = iou(g[rows[r]].box, h[cols[c]].box);
        if (v < match_iou) return std::nullopt;
        return C{{0, std::llround((1.0 - v) * 1e9)}};
      };
      auto asg = min_cost_assignment<C>(nr, nc + nr, cost);
      for (int r = 0; r < nr; ++r)
        if (int c = (*asg)[r]; c < nc) {
          g_match[rows[r]] = cols[c];
          h_used[cols[c]] = 1;
        }
    }

    for (std::size_t i = 0; i < g.size(); ++i) {
      const int id = g[i].id;
      ++seen[id];
      ++r.gt_boxes;
      if (g_match[i] < 0) {
        ++r.fn;
        fl.false_negatives.push_back(id);
        tracked_prev[id] = false;
        continue;
      }
      const LabeledBox& hb = h[g_match[i]];
      ++r.matches;
      ++covered[id];
      iou_sum += iou(g[i].box, hb.box);
      fl.matches.emplace_back(id, hb.id);
      if (auto lm = last_match.find(id); lm != last_match.end() && lm->second != hb.id) {
        ++r.idsw;
        fl.id_switches.push_back(id);
      }
      if (ever_tracked[id] && !tracked_prev[id]) ++r.frag;
      last_match[id] = hb.id;
      tracked_prev[id] = ever_tracked[id] = true;
    }
    for (std::size_t j = 0; j < h.size(); ++j)
      if (!h_used[j]) {
        ++r.fp;
        fl.false_positives.push_back(h[j].id);
      }
    r.log.push_back(std::move(fl));
  }

  r.gt_tracks = static_cast<long>(seen.size());
  for (const auto& [id, n] : seen) {
    const double cov = static_cast<double>(covered[id]) / n;
    if (cov >= 0.8) ++r.mostly_tracked;
    if (cov <= 0.2) ++r.mostly_lost;
  }
  r.mota = 100.0 * (1.0 - static_cast<double>(r.fn + r.fp + r.idsw) / static_cast<double>(r.gt_boxes));
  r.motp = r.matches ? 100.0 * iou_sum / static_cast<double>(r.matches) : 0.0;
  r.mt = 100.0 * static_cast<double>(r.mostly_tracked) / static_cast<double>(r.gt_tracks);
  r.ml = 100.0 * static_cast<double>(r.mostly_lost) / static_cast<double>(r.gt_tracks);
  return r;
}

inline std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::setw(8) << "MOTA" << std::setw(8) << "MOTP" << std::setw(8) << "MT" << std::setw(8)
     << "ML" << std::setw(7) << "FP" << std::setw(7) << "FN" << std::setw(7) << "IDSW" << std::setw(7)
     << "Frag" << '\n';
  os << std::setw(7) << r.mota << '%' << std::setw(7) << r.motp << '%' << std::setw(7) << r.mt << '%'
     << std::setw(7) << r.ml << '%' << std::setw(7) << r.fp << std::setw(7) << r.fn << std::setw(7)
     << r.idsw << std::setw(7) << r.frag << '\n';
  return os.str();
}

inline nlohmann::json report_json(const EvalReport& r, bool with_log = false) {
  nlohmann::json j = {{"mota", r.mota},         {"motp", r.motp},
                      {"mt", r.mt},             {"ml", r.ml},
                      {"fp", r.fp},             {"fn", r.fn},
                      {"idsw", r.idsw},         {"frag", r.frag},
                      {"gt_boxes", r.gt_boxes}, {"matches", r.matches},
                      {"gt_tracks", r.gt_tracks}};
  if (with_log) {
    auto& frames = j["frames"] = nlohmann::json::array();
    for (const auto& f : r.log)
      frames.push_back({{"frame", f.frame},
                        {"matches", f.matches},
                        {"fn", f.false_negatives},
                        {"fp", f.false_positives},
                        {"idsw", f.id_switches}});
  }
  return j;
}

}  // namespace abtrack
