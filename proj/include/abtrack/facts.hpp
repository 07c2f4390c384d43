#pragma once

// Problem specifications in logic-program fact syntax.
//
// Grammar, one fact per line, in this order:
//
//   #const curr_time=T.
//   det(det_N, CLASS, CONF).                 for each detection, by id
//   box2d(det_N, X, Y, W, H).                for each detection, by id
//   trk(trk_N, CLASS).                       for each track, by id, each
//   trk_state(trk_N, active|halted).         followed by its state
//   box2d(trk_N, X, Y, W, H).                predicted box, by track id
//   iou(trk_N,det_M,ML).                     ML > 0 only; by detection, then track
//
// Box coordinates are rounded to the nearest integer pixel. Extension facts
// follow the block above and are written only when they differ from the
// defaults, so a fresh problem renders exactly as the block:
//
//   #const frame_width=W.  #const frame_height=H.
//   halted_for(trk_N, K).
//   holds_at(visibility(trk_N), not_visible, curr_time).
//   holds_at(hidden_by(trk_N, trk_M), true, curr_time).
//   holds_at(clipped(trk_N), true, curr_time).
//   holds_at(in_fov(trk_N), false, curr_time).
//
// parse_facts accepts any whitespace layout (several facts per line) and
// `%` line comments.

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "abtrack/abduction.hpp"

namespace abtrack {

namespace detail {

inline long round_px(double v) { return std::lround(v); }

inline void write_box(std::ostream& os, const std::string& id, const BBox2D& b) {
  os << "box2d(" << id << ", " << round_px(b.x()) << ", " << round_px(b.y()) << ", "
     << round_px(b.w()) << ", " << round_px(b.h()) << ").\n";
}

}  // namespace detail

inline std::string emit_facts(const ProblemSpec& input) {
  ProblemSpec spec = input;
  spec.normalize();
  std::ostringstream os;
  os << "#const curr_time=" << spec.frame << ".\n";
  for (const auto& d : spec.detections)
    os << "det(" << to_string(d.id) << ", " << d.cls << ", " << d.confidence << ").\n";
  for (const auto& d : spec.detections) detail::write_box(os, to_string(d.id), d.box);
  for (const auto& p : spec.predictions)
    os << "trk(" << to_string(p.id) << ", " << p.cls << ").\n"
       << "trk_state(" << to_string(p.id) << ", " << to_string(p.state) << ").\n";
  for (const auto& p : spec.predictions) detail::write_box(os, to_string(p.id), p.box);
  for (const auto& d : spec.detections)
    for (const auto& p : spec.predictions)
      if (int ml = spec.likelihood(p.id, d.id); ml > 0)
        os << "iou(" << to_string(p.id) << ',' << to_string(d.id) << ',' << ml << ").\n";

  if (spec.frame_geometry && spec.frame_geometry->known())
    os << "#const frame_width=" << detail::round_px(spec.frame_geometry->width) << ".\n"
       << "#const frame_height=" << detail::round_px(spec.frame_geometry->height) << ".\n";
  for (const auto& p : spec.predictions)
    if (p.frames_halted > 0)
      os << "halted_for(" << to_string(p.id) << ", " << p.frames_halted << ").\n";
  for (const auto& p : spec.predictions) {
    const auto& f = spec.fluents;
    if (f.visibility(p.id) != Visibility::fully_visible)
      os << "holds_at(visibility(" << to_string(p.id) << "), " << to_string(f.visibility(p.id))
         << ", curr_time).\n";
    for (const auto& [hidden, occluder] : f.hidden_pairs())
      if (hidden == p.id)
        os << "holds_at(hidden_by(" << to_string(hidden) << ", " << to_string(occluder)
           << "), true, curr_time).\n";
    if (f.clipped(p.id)) os << "holds_at(clipped(" << to_string(p.id) << "), true, curr_time).\n";
    if (!f.in_fov(p.id)) os << "holds_at(in_fov(" << to_string(p.id) << "), false, curr_time).\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Parsing

struct FactParseError : std::runtime_error {
  FactParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

namespace detail {

struct Term {
  std::string name;
  std::vector<Term> args;
};

class TermParser {
 public:
  TermParser(std::string_view s, int line) : s_(s), line_(line) {}

  Term parse() {
    Term t = term();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return t;
  }

 private:
  Term term() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '_' || s_[pos_] == '-'))
      ++pos_;
    if (start == pos_) fail("expected a term");
    Term t{std::string(s_.substr(start, pos_ - start)), {}};
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      for (;;) {
        t.args.push_back(term());
        skip_ws();
        if (pos_ >= s_.size()) fail("unterminated argument list");
        if (s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (s_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
    }
    return t;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw FactParseError(line_, msg + " in '" + std::string(s_) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

inline long parse_int(const Term& t, int line) {
  long v = 0;
  const auto& s = t.name;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !t.args.empty())
    throw FactParseError(line, "expected an integer, got '" + s + "'");
  return v;
}

template <class Id>
Id parse_id(const Term& t, std::string_view prefix, int line) {
  if (!t.args.empty() || t.name.rfind(prefix, 0) != 0)
    throw FactParseError(line, "expected " + std::string(prefix) + "N, got '" + t.name + "'");
  Term num{t.name.substr(prefix.size()), {}};
  return Id{static_cast<std::int32_t>(parse_int(num, line))};
}

}  // namespace detail

/// Parses the grammar written by emit_facts. Unknown predicates are rejected.
inline ProblemSpec parse_facts(std::string_view text) {
  using detail::parse_id;
  using detail::parse_int;
  using detail::Term;

  ProblemSpec spec;
  std::map<DetectionId, Detection> dets;
  std::map<DetectionId, BBox2D> det_boxes;
  std::map<TrackId, Prediction> trks;
  std::map<TrackId, BBox2D> trk_boxes;
  std::map<TrackId, TrackState> states;
  std::map<TrackId, int> halted_for;
  std::vector<std::pair<int, Term>> fluent_facts;
  double width = 0.0, height = 0.0;
  bool have_time = false;

  // Split into statements terminated by '.' outside parentheses.
  int line = 1, stmt_line = 1, depth = 0;
  std::string cur;
  auto flush = [&] {
    std::string_view s = cur;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    if (s.empty()) throw FactParseError(stmt_line, "empty statement");

    if (s.rfind("#const", 0) == 0) {
      s.remove_prefix(6);
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) throw FactParseError(stmt_line, "malformed #const");
      std::string name(s.substr(0, eq));
      name.erase(0, name.find_first_not_of(" \t"));
      name.erase(name.find_last_not_of(" \t") + 1);
      std::string value(s.substr(eq + 1));
      value.erase(0, value.find_first_not_of(" \t"));
      value.erase(value.find_last_not_of(" \t\r\n") + 1);
      const long v = parse_int(Term{value, {}}, stmt_line);
      if (name == "curr_time") {
        spec.frame = v;
        have_time = true;
      } else if (name == "frame_width") {
        width = static_cast<double>(v);
      } else if (name == "frame_height") {
        height = static_cast<double>(v);
      } else {
        throw FactParseError(stmt_line, "unknown constant '" + name + "'");
      }
      return;
    }

    const Term t = detail::TermParser(s, stmt_line).parse();
    auto want = [&](std::size_t n) {
      if (t.args.size() != n)
        throw FactParseError(stmt_line, t.name + " takes " + std::to_string(n) + " arguments");
    };
    if (t.name == "det") {
      want(3);
      const auto id = parse_id<DetectionId>(t.args[0], "det_", stmt_line);
      const long conf = parse_int(t.args[2], stmt_line);
      if (!dets.emplace(id, Detection{id, t.args[1].name, static_cast<int>(conf), {}}).second)
        throw FactParseError(stmt_line, "duplicate " + to_string(id));
    } else if (t.name == "trk") {
      want(2);
      const auto id = parse_id<TrackId>(t.args[0], "trk_", stmt_line);
      if (!trks.emplace(id, Prediction{id, t.args[1].name, TrackState::active, {}, 0}).second)
        throw FactParseError(stmt_line, "duplicate " + to_string(id));
    } else if (t.name == "trk_state") {
      want(2);
      const auto id = parse_id<TrackId>(t.args[0], "trk_", stmt_line);
      const auto& s2 = t.args[1].name;
      if (s2 == "active") states[id] = TrackState::active;
      else if (s2 == "halted") states[id] = TrackState::halted;
      else throw FactParseError(stmt_line, "unknown track state '" + s2 + "'");
    } else if (t.name == "box2d") {
      want(5);
      double v[4];
      for (int i = 0; i < 4; ++i) v[i] = static_cast<double>(parse_int(t.args[i + 1], stmt_line));
      BBox2D box;
      try {
        box = BBox2D(v[0], v[1], v[2], v[3]);
      } catch (const std::invalid_argument& e) {
        throw FactParseError(stmt_line, e.what());
      }
      const auto& id = t.args[0].name;
      if (id.rfind("det_", 0) == 0) det_boxes[parse_id<DetectionId>(t.args[0], "det_", stmt_line)] = box;
      else trk_boxes[parse_id<TrackId>(t.args[0], "trk_", stmt_line)] = box;
    } else if (t.name == "iou") {
      want(3);
      const auto tr = parse_id<TrackId>(t.args[0], "trk_", stmt_line);
      const auto de = parse_id<DetectionId>(t.args[1], "det_", stmt_line);
      const long ml = parse_int(t.args[2], stmt_line);
      if (ml < 0 || ml > 100000) throw FactParseError(stmt_line, "iou out of range");
      spec.likelihoods[{tr, de}] = static_cast<int>(ml);
    } else if (t.name == "halted_for") {
      want(2);
      halted_for[parse_id<TrackId>(t.args[0], "trk_", stmt_line)] =
          static_cast<int>(parse_int(t.args[1], stmt_line));
    } else if (t.name == "holds_at") {
      want(3);
      fluent_facts.emplace_back(stmt_line, t);
    } else {
      throw FactParseError(stmt_line, "unknown predicate '" + t.name + "'");
    }
  };

  bool in_comment = false;
  for (char c : text) {
    if (c == '\n') {
      ++line;
      in_comment = false;
      if (!cur.empty()) cur += ' ';
      continue;
    }
    if (in_comment) continue;
    if (c == '%' && depth == 0) {
      in_comment = true;
      continue;
    }
    if (cur.empty() && std::isspace(static_cast<unsigned char>(c))) continue;
    if (cur.empty()) stmt_line = line;
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == '.' && depth == 0) {
      flush();
      cur.clear();
      continue;
    }
    cur += c;
  }
  if (cur.find_first_not_of(" \t\r") != std::string::npos)
    throw FactParseError(stmt_line, "missing terminating '.'");
  if (!have_time) throw FactParseError(1, "missing #const curr_time");

  for (auto& [id, d] : dets) {
    auto it = det_boxes.find(id);
    if (it == det_boxes.end()) throw FactParseError(line, "no box2d for " + to_string(id));
    d.box = it->second;
    spec.detections.push_back(d);
  }
  for (auto& [id, p] : trks) {
    auto it = trk_boxes.find(id);
    if (it == trk_boxes.end()) throw FactParseError(line, "no box2d for " + to_string(id));
    p.box = it->second;
    if (auto s = states.find(id); s != states.end()) p.state = s->second;
    if (auto h = halted_for.find(id); h != halted_for.end()) p.frames_halted = h->second;
    spec.predictions.push_back(p);
    spec.fluents.add_track(id);
  }
  if (width > 0.0 && height > 0.0) spec.frame_geometry = FrameGeometry{width, height};

  for (const auto& [ln, t] : fluent_facts) {
    const Term& f = t.args[0];
    const std::string& v = t.args[1].name;
    if (f.args.empty()) throw FactParseError(ln, "malformed fluent");
    const auto tr = parse_id<TrackId>(f.args[0], "trk_", ln);
    if (!spec.fluents.contains(tr)) throw FactParseError(ln, "fluent on unknown " + to_string(tr));
    auto values = spec.fluents.values(tr);
    auto boolean = [&] {
      if (v != "true" && v != "false") throw FactParseError(ln, "expected true or false");
      return v == "true";
    };
    if (f.name == "visibility") {
      if (v == "fully_visible") values.visibility = Visibility::fully_visible;
      else if (v == "partially_visible") values.visibility = Visibility::partially_visible;
      else if (v == "not_visible") values.visibility = Visibility::not_visible;
      else throw FactParseError(ln, "unknown visibility '" + v + "'");
    } else if (f.name == "hidden_by") {
      if (f.args.size() != 2) throw FactParseError(ln, "hidden_by takes two tracks");
      const auto occ = parse_id<TrackId>(f.args[1], "trk_", ln);
      if (!spec.fluents.contains(occ)) throw FactParseError(ln, "fluent on unknown " + to_string(occ));
      spec.fluents.restore_hidden_by(tr, occ, boolean());
    } else if (f.name == "clipped") {
      values.clipped = boolean();
    } else if (f.name == "in_fov") {
      values.in_fov = boolean();
    } else {
      throw FactParseError(ln, "unknown fluent '" + f.name + "'");
    }
    spec.fluents.restore(tr, values);
  }
  if (!spec.fluents.consistent())
    throw FactParseError(line, "hidden_by without visibility not_visible");
  return spec;
}

}  // namespace abtrack
