// A car drives behind a bus, disappears for a few frames and comes out on
// the other side. Prints the abduced events, the anticipated reappearance and
// the recovered track.

#include <iostream>

#include "abtrack/anticipation.hpp"
#include "abtrack/io.hpp"
#include "abtrack/tracker.hpp"

using namespace abtrack;

int main() {
  EngineConfig cfg;
  cfg.frame_geometry = FrameGeometry{1242, 375};
  Engine engine(cfg);

  const BBox2D bus(500, 150, 300, 200);
  for (Frame f = 0; f < 40; ++f) {
    std::vector<Detection> dets{{DetectionId{0}, "bus", 95, bus}};
    const BBox2D car(420 + 10.0 * f, 250, 60, 40);
    const bool hidden = car.left() > bus.left() && car.right() < bus.right();
    if (!hidden) dets.push_back({DetectionId{1}, "car", 90, car});
    engine.step(f, dets);

    for (const auto& a : anticipate_unhide(snapshot(engine)))
      std::cout << "frame " << f << ": " << anticipate_term(a) << "  " << position_term(a) << '\n';
  }

  const Explanation& exp = engine.finalize();
  std::cout << write_events(exp);
  std::cout << write_tracks(exp);
}
