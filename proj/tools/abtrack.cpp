// abtrack: command-line entry points.
//
// Exit status: 0 success, 1 input or runtime error, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "abtrack/abtrack.hpp"

namespace fs = std::filesystem;
using namespace abtrack;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct CommonOptions {
  Thresholds th;
  std::vector<std::string> aliases;
  std::string format = "mot";
  std::string cls = "car";
  std::vector<std::string> kitti_classes;
  double width = 0.0, height = 0.0;

  void attach(CLI::App* app) {
    app->add_option("--iou-thresh", th.iou_thresh, "minimum IoU for assign")->capture_default_str();
    app->add_option("--conf-assign", th.conf_thresh_assign, "confidence threshold for assign")->capture_default_str();
    app->add_option("--conf-resume", th.conf_thresh_resume, "confidence threshold for resume")->capture_default_str();
    app->add_option("--conf-new", th.conf_thresh_new_track, "confidence threshold for start")->capture_default_str();
    app->add_option("--size-thresh", th.size_threshold, "minimum box area (px^2) for start")->capture_default_str();
    app->add_option("--max-halted-age", th.max_halted_age, "frames a halted track waits before it may be lost")
        ->capture_default_str();
    app->add_option("--anticipation-threshold", th.anticipation_threshold, "warning horizon in frames")
        ->capture_default_str();
    app->add_option("--fov-margin", th.fov_margin, "border margin (px) for leaving the view")->capture_default_str();
    app->add_option("--resume-gate", th.resume_gate, "resume gate in predicted-box diagonals, 0 disables")
        ->capture_default_str();
    app->add_option("--alias", aliases, "compatible class pair, e.g. bus:truck");
    app->add_option("--format", format, "detection format")->check(CLI::IsMember({"mot", "kitti"}))->capture_default_str();
    app->add_option("--class", cls, "class assigned to MOT detections")->capture_default_str();
    app->add_option("--kitti-class", kitti_classes, "KITTI classes to keep (default: all)");
    app->add_option("--width", width, "image width in px (enables border events)");
    app->add_option("--height", height, "image height in px");
  }

  EngineConfig engine() const {
    EngineConfig cfg;
    cfg.thresholds = th;
    for (const auto& a : aliases) {
      const auto colon = a.find(':');
      if (colon == std::string::npos) throw std::runtime_error("alias must be a:b, got " + a);
      cfg.thresholds.class_aliases.emplace_back(a.substr(0, colon), a.substr(colon + 1));
    }
    if (width > 0.0 && height > 0.0) cfg.frame_geometry = FrameGeometry{width, height};
    cfg.thresholds.validate();
    return cfg;
  }

  DetectionStream load(const std::string& path) const {
    const std::string text = read_file(path);
    return format == "kitti" ? parse_kitti(text, kitti_classes) : parse_mot(text, cls);
  }

  TrackSet load_tracks(const std::string& path) const {
    const std::string text = read_file(path);
    return format == "kitti" ? parse_kitti_tracks(text, kitti_classes) : parse_mot_tracks(text);
  }
};

struct Latency {
  double mean = 0.0, p95 = 0.0;
};

Latency summarize(std::vector<double> ms) {
  Latency l;
  if (ms.empty()) return l;
  l.mean = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  std::sort(ms.begin(), ms.end());
  const auto idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(ms.size()))) - 1;
  l.p95 = ms[std::min(idx, ms.size() - 1)];
  return l;
}

void print_latency(std::ostream& os, const RunStats& stats) {
  const Latency l = summarize(stats.step_ms);
  os << std::fixed << std::setprecision(3) << "frames " << stats.step_ms.size() << "  mean " << l.mean
     << " ms  p95 " << l.p95 << " ms  fps " << std::setprecision(1) << (l.mean > 0.0 ? 1000.0 / l.mean : 0.0)
     << '\n';
}

void write_latency_csv(const std::string& path, const RunStats& stats, Frame first) {
  std::ostringstream os;
  os << "frame,ms\n";
  for (std::size_t i = 0; i < stats.step_ms.size(); ++i)
    os << first + static_cast<Frame>(i) << ',' << format_number(stats.step_ms[i]) << '\n';
  write_file(path, os.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online multi-object tracking with event abduction"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value config file; command-line flags take precedence");

  // track
  CommonOptions track_opts;
  std::string track_input, tracks_out, events_out, json_out, facts_dir, latency_csv;
  auto* track = app.add_subcommand("track", "track a detection file and write tracks and events");
  track->add_option("input", track_input, "detection file")->required()->check(CLI::ExistingFile);
  track->add_option("--tracks", tracks_out, "MOT result file to write");
  track->add_option("--events", events_out, "event log to write (default: stdout)");
  track->add_option("--json", json_out, "structured output with provenance and fluent snapshots");
  track->add_option("--emit-facts", facts_dir, "directory for one fact file per frame");
  track->add_option("--latency-csv", latency_csv, "per-frame step latency");
  track_opts.attach(track);

  // eval
  CommonOptions eval_opts;
  std::string gt_path, hyp_path;
  double match_iou = 0.5;
  bool eval_json = false;
  auto* eval = app.add_subcommand("eval", "CLEAR-MOT evaluation of a result file against ground truth");
  eval->add_option("gt", gt_path, "ground-truth file")->required()->check(CLI::ExistingFile);
  eval->add_option("hyp", hyp_path, "result file")->required()->check(CLI::ExistingFile);
  eval->add_option("--match-iou", match_iou, "IoU needed for a match")->capture_default_str();
  eval->add_flag("--json", eval_json, "print JSON instead of the table");
  eval->add_option("--format", eval_opts.format, "file format")->check(CLI::IsMember({"mot", "kitti"}))->capture_default_str();
  eval->add_option("--kitti-class", eval_opts.kitti_classes, "KITTI classes to keep (default: all)");

  // bench
  CommonOptions bench_opts;
  std::vector<int> bench_sizes{5, 10, 20, 50, 100};
  int bench_frames = 100;
  double bench_overlap = 0.2;
  std::uint64_t seed = 1;
  std::string bench_csv;
  auto* bench = app.add_subcommand("bench", "time the tracker on synthetic scenarios");
  bench->add_option("--tracks", bench_sizes, "track counts")->delimiter(',')->capture_default_str();
  bench->add_option("--frames", bench_frames, "frames per scenario")->capture_default_str();
  bench->add_option("--overlap", bench_overlap, "fraction of frames with overlapping tracks")->capture_default_str();
  bench->add_option("--seed", seed, "scenario seed")->capture_default_str();
  bench->add_option("--csv", bench_csv, "write the table as CSV");
  bench_opts.attach(bench);

  // anticipate
  CommonOptions ant_opts;
  std::string ant_input;
  int horizon = 60;
  auto* ant = app.add_subcommand("anticipate", "track and print anticipated reappearances and warnings");
  ant->add_option("input", ant_input, "detection file")->required()->check(CLI::ExistingFile);
  ant->add_option("--horizon", horizon, "frames to look ahead")->capture_default_str();
  ant_opts.attach(ant);

  // emit-facts
  CommonOptions facts_opts;
  std::string facts_input, facts_out_dir;
  auto* facts = app.add_subcommand("emit-facts", "print each frame's problem in fact syntax");
  facts->add_option("input", facts_input, "detection file")->required()->check(CLI::ExistingFile);
  facts->add_option("--out-dir", facts_out_dir, "write frame_<T>.lp files instead of stdout");
  facts_opts.attach(facts);

  // solve
  std::string solve_input;
  bool solve_oracle_flag = false;
  auto* solve_cmd = app.add_subcommand("solve", "solve one problem given in fact syntax");
  solve_cmd->add_option("facts", solve_input, "fact file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_flag("--oracle", solve_oracle_flag, "use the exhaustive solver (at most 5x5)");
  CommonOptions solve_opts;
  solve_opts.attach(solve_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    std::cerr << (sub ? sub->help() : app.help());
    return 2;
  }

  try {
    if (*track) {
      const EngineConfig cfg = track_opts.engine();
      const DetectionStream stream = track_opts.load(track_input);
      Engine engine(cfg);
      if (!facts_dir.empty()) fs::create_directories(facts_dir);
      const RunStats stats = run_stream(engine, stream, [&](Frame f) {
        if (!facts_dir.empty())
          write_file((fs::path(facts_dir) / ("frame_" + std::to_string(f) + ".lp")).string(),
                     emit_facts(*engine.last_problem()));
      });
      const Explanation& exp = engine.finalize();
      if (events_out.empty()) std::cout << write_events(exp);
      else write_file(events_out, write_events(exp));
      if (!tracks_out.empty()) write_file(tracks_out, write_tracks(exp));
      if (!json_out.empty()) write_file(json_out, tracks_json(exp).dump(2) + '\n');
      if (!latency_csv.empty() && !stream.frames.empty())
        write_latency_csv(latency_csv, stats, stream.frames.front().frame);
      print_latency(std::cerr, stats);
    } else if (*eval) {
      const TrackSet gt = eval_opts.load_tracks(gt_path);
      const TrackSet hyp = eval_opts.load_tracks(hyp_path);
      const EvalReport r = evaluate(gt, hyp, match_iou);
      if (eval_json) std::cout << report_json(r).dump(2) << '\n';
      else std::cout << format_report(r);
    } else if (*bench) {
      const EngineConfig cfg = bench_opts.engine();
      std::ostringstream table, csv;
      table << std::setw(8) << "tracks" << std::setw(12) << "ms/frame" << std::setw(10) << "fps" << '\n';
      csv << "tracks,ms_per_frame,fps\n";
      for (int n : bench_sizes) {
        ScenarioConfig sc;
        sc.n_tracks = n;
        sc.frames = bench_frames;
        sc.overlap_fraction = bench_overlap;
        sc.seed = seed;
        const Scenario s = generate(sc);
        EngineConfig ec = cfg;
        ec.frame_geometry = sc.frame_geom;
        Engine engine(ec);
        const Latency l = summarize(run_stream(engine, s.detections).step_ms);
        const double fps = l.mean > 0.0 ? 1000.0 / l.mean : 0.0;
        table << std::setw(8) << n << std::setw(12) << std::fixed << std::setprecision(3) << l.mean
              << std::setw(10) << std::setprecision(1) << fps << '\n';
        csv << n << ',' << format_number(l.mean) << ',' << format_number(fps) << '\n';
      }
      std::cout << table.str();
      if (!bench_csv.empty()) write_file(bench_csv, csv.str());
    } else if (*ant) {
      EngineConfig cfg = ant_opts.engine();
      const DetectionStream stream = ant_opts.load(ant_input);
      Engine engine(cfg);
      std::size_t printed = 0;
      run_stream(engine, stream, [&](Frame f) {
        const auto& evs = engine.events();
        for (; printed < evs.size(); ++printed) std::cout << occurs_at(evs[printed]) << '\n';
        const auto snap = snapshot(engine);
        const auto antic = anticipate_unhide(snap, horizon);
        for (const auto& a : antic) std::cout << anticipate_term(a) << '\n' << position_term(a) << '\n';
        if (cfg.frame_geometry)
          for (const auto& w : warnings(antic, f, *cfg.frame_geometry, cfg.thresholds.anticipation_threshold))
            std::cout << warning_term(w) << '\n';
      });
    } else if (*facts) {
      const EngineConfig cfg = facts_opts.engine();
      const DetectionStream stream = facts_opts.load(facts_input);
      Engine engine(cfg);
      if (!facts_out_dir.empty()) fs::create_directories(facts_out_dir);
      run_stream(engine, stream, [&](Frame f) {
        const std::string text = emit_facts(*engine.last_problem());
        if (facts_out_dir.empty()) std::cout << text << '\n';
        else write_file((fs::path(facts_out_dir) / ("frame_" + std::to_string(f) + ".lp")).string(), text);
      });
    } else if (*solve_cmd) {
      ProblemSpec spec = parse_facts(read_file(solve_input));
      spec.config = solve_opts.engine().thresholds;
      if (solve_opts.width > 0.0 && solve_opts.height > 0.0)
        spec.frame_geometry = FrameGeometry{solve_opts.width, solve_opts.height};
      const SolveResult r = solve_oracle_flag ? solve_oracle(spec) : solve(spec);
      std::string line;
      for (const auto& a : r.actions()) line += (line.empty() ? "" : " ") + to_string(a);
      std::cout << line << '\n';
      for (const auto& e : r.events()) std::cout << occurs_at(e) << '\n';
      std::cout << "% objective " << r.objective.level10 << ' ' << r.objective.level3 << ' '
                << r.objective.level2 << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
