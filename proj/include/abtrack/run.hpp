#pragma once

// Drives a tracker over a whole detection stream. Frames missing from the
// stream between its first and last frame are stepped with no detections, so
// motion prediction advances once per frame.

#include <chrono>
#include <vector>

#include "abtrack/io.hpp"
#include "abtrack/tracker.hpp"

namespace abtrack {

struct RunStats {
  std::vector<double> step_ms;  // per processed frame
};

template <class Tracker, class OnStep>
RunStats run_stream(Tracker& tracker, const DetectionStream& stream, OnStep&& on_step) {
  RunStats stats;
  if (stream.frames.empty()) return stats;
  static const std::vector<Detection> kNone;
  std::size_t i = 0;
  for (Frame f = stream.frames.front().frame; f <= stream.frames.back().frame; ++f) {
    const bool present = i < stream.frames.size() && stream.frames[i].frame == f;
    const auto& dets = present ? stream.frames[i].detections : kNone;
    if (present) ++i;
    const auto t0 = std::chrono::steady_clock::now();
    tracker.step(f, dets);
    const auto t1 = std::chrono::steady_clock::now();
    stats.step_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    on_step(f);
  }
  return stats;
}

template <class Tracker>
RunStats run_stream(Tracker& tracker, const DetectionStream& stream) {
  return run_stream(tracker, stream, [](Frame) {});
}

}  // namespace abtrack
