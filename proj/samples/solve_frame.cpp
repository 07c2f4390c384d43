// Solve a single frame built in code and print its facts and hypothesis.

#include <iostream>

#include "abtrack/abduction.hpp"
#include "abtrack/facts.hpp"

using namespace abtrack;

int main() {
  ProblemSpec spec;
  spec.frame = 12;
  spec.detections = {
      {DetectionId{0}, "car", 97, BBox2D(100, 200, 80, 50)},
      {DetectionId{1}, "bus", 95, BBox2D(300, 150, 240, 180)},
  };
  spec.predictions = {
      {TrackId{0}, "car", TrackState::active, BBox2D(104, 201, 80, 50), 0},
      {TrackId{1}, "car", TrackState::active, BBox2D(380, 250, 90, 60), 0},
  };
  spec.compute_likelihoods();

  std::cout << emit_facts(spec) << '\n';
  const SolveResult r = solve(spec);
  for (const auto& d : r.decisions) {
    std::cout << to_string(d.action);
    if (d.event) std::cout << "  " << occurs_at(*d.event);
    std::cout << '\n';
  }
}
