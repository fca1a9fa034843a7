// cptrack: constraint-based multi-object tracking over detection files.
//
// Subcommands: track, eval, cluster, synth, bench. Exit codes: 0 success,
// 1 usage error, 2 data error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cptrack/appearance.hpp"
#include "cptrack/image.hpp"
#include "cptrack/io.hpp"
#include "cptrack/metrics.hpp"
#include "cptrack/pipeline.hpp"
#include "cptrack/synth.hpp"

namespace {

using namespace cptrack;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string frame_path(const std::string& dir, int frame) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06d.ppm", frame);
  return (std::filesystem::path(dir) / name).string();
}

void print_report(std::ostream& out, const MetricsReport& r) {
  char line[256];
  out << "metric      value\n";
  std::snprintf(line, sizeof line, "MOTA   %10.4f\n", r.mota);
  out << line;
  std::snprintf(line, sizeof line, "IDF1   %10.4f\n", r.idf1);
  out << line;
  std::snprintf(line, sizeof line, "MT     %10.4f\n", r.mt);
  out << line;
  std::snprintf(line, sizeof line, "ML     %10.4f\n", r.ml);
  out << line;
  std::snprintf(line, sizeof line, "FP     %10lld\n", r.fp);
  out << line;
  std::snprintf(line, sizeof line, "FN     %10lld\n", r.fn);
  out << line;
  std::snprintf(line, sizeof line, "IDS    %10lld\n", r.ids);
  out << line;
  std::snprintf(line, sizeof line, "Frag   %10lld\n", r.frag);
  out << line;
  std::snprintf(line, sizeof line, "N      %10lld\n", r.n);
  out << line;
}

std::string report_csv_row(const MetricsReport& r) {
  char line[256];
  std::snprintf(line, sizeof line, "%.6f,%.6f,%.6f,%.6f,%lld,%lld,%lld,%lld,%lld", r.mota,
                r.idf1, r.mt, r.ml, r.fp, r.fn, r.ids, r.frag, r.n);
  return line;
}

constexpr const char* kReportCsvHeader = "MOTA,IDF1,MT,ML,FP,FN,IDS,Frag,N";

int run_track(const std::string& det_path, const std::string& config_path,
              const std::string& out_path, const std::string& hist_path,
              const std::string& model_path, const std::string& frames_dir, bool no_presolve,
              bool print_cfg) {
  const Config config = config_path.empty() ? Config{} : load_config(config_path);
  if (print_cfg) std::cout << print_config(config);

  TrackInputs inputs;
  inputs.detections = parse_detections(det_path);
  if (!hist_path.empty()) inputs.histograms = parse_histograms(hist_path);
  if (!model_path.empty()) inputs.color_model = parse_color_model(model_path);

  if (!frames_dir.empty()) {
    if (!inputs.color_model)
      throw std::runtime_error("--frames requires --color-model for class assignment");
    const FrameMap frames = group_by_frame(inputs.detections);
    for (const auto& [frame, dets] : frames) {
      const Image img = read_ppm(frame_path(frames_dir, frame));
      for (std::size_t j = 0; j < dets.size(); ++j)
        inputs.histograms[{frame, static_cast<int>(j) + 1}] =
            extract_histogram(img, dets[j].box);
    }
  }

  TrackOptions options;
  options.presolve = !no_presolve;
  const TrackSet tracks = track_video(inputs, config, options);
  write_tracks(tracks, out_path);
  std::cout << "wrote " << tracks.tracks.size() << " tracks to " << out_path << "\n";
  return 0;
}

int run_eval(const std::string& gt_path, const std::string& hyp_path, double iou_thresh,
             const std::string& csv_path) {
  const TrackSet gt = parse_tracks(gt_path);
  const TrackSet hyp = parse_tracks(hyp_path);
  const MetricsReport r = evaluate(gt, hyp, iou_thresh);
  print_report(std::cout, r);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    out << kReportCsvHeader << "\n" << report_csv_row(r) << "\n";
  }
  return 0;
}

int run_cluster(const std::string& hist_path, int k, std::uint64_t seed,
                const std::string& out_path) {
  const auto hists = parse_histograms(hist_path);
  std::vector<ColorHistogram> samples;
  samples.reserve(hists.size());
  for (const auto& [key, h] : hists) samples.push_back(h);
  const ColorClassModel model = kmeans_cluster(samples, k, seed);
  write_color_model(model, out_path);
  std::cout << "clustered " << samples.size() << " histograms into " << k << " classes -> "
            << out_path << "\n";
  return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_dir) {
  const SceneSpec spec = parse_scene_spec_text(read_file(spec_path));
  const Scene scene = generate_scene(spec);
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  write_tracks(scene.ground_truth, (dir / "gt.csv").string());
  write_detections(scene.detections, (dir / "det.csv").string());
  write_histograms(scene.histograms, (dir / "hist.csv").string());
  write_color_model(scene.model, (dir / "model.txt").string());
  std::cout << "scene with " << scene.ground_truth.tracks.size() << " objects, "
            << scene.detections.size() << " detections -> " << out_dir << "\n";
  return 0;
}

int run_bench(const std::string& suite_path, const std::string& config_path,
              const std::string& out_dir) {
  const SuiteConfig suite = parse_suite_config_text(read_file(suite_path));
  const Config config = config_path.empty() ? Config{} : load_config(config_path);
  const BenchResult result = run_benchmark(suite, config);

  char line[256];
  std::cout << "method   MOTA     IDF1      FP      FN     IDS    Frag\n";
  for (const auto& [method, r] : result.aggregate) {
    std::snprintf(line, sizeof line, "%-6s %7.4f  %7.4f  %6lld  %6lld  %6lld  %6lld\n",
                  method.c_str(), r.mota, r.idf1, r.fp, r.fn, r.ids, r.frag);
    std::cout << line;
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "bench.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "run,seed,method," << kReportCsvHeader << "\n";
    for (std::size_t i = 0; i < result.runs.size(); ++i)
      for (const auto& [method, r] : result.runs[i].by_method)
        out << i << ',' << result.runs[i].seed << ',' << method << ',' << report_csv_row(r)
            << "\n";
    for (const auto& [method, r] : result.aggregate)
      out << "all,," << method << ',' << report_csv_row(r) << "\n";
    std::cout << "per-run rows -> " << path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constraint-based multi-object tracking"};
  app.require_subcommand(1);

  std::string det_path, config_path, out_path, hist_path, model_path, frames_dir;
  bool no_presolve = false, print_cfg = false;
  CLI::App* track = app.add_subcommand("track", "associate detections into tracks");
  track->add_option("--det", det_path, "detections csv")->required();
  track->add_option("--config", config_path, "config file (key=value lines)");
  track->add_option("--out", out_path, "output tracks csv")->required();
  track->add_option("--hist", hist_path, "histogram sidecar csv");
  track->add_option("--color-model", model_path, "color class model file");
  track->add_option("--frames", frames_dir, "directory with frame_%06d.ppm images");
  track->add_flag("--no-presolve", no_presolve, "skip prediction-based augmentation");
  track->add_flag("--print-config", print_cfg, "echo the effective configuration");

  std::string gt_path, hyp_path, eval_csv;
  double iou_thresh = 0.5;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score tracks against ground truth");
  eval_cmd->add_option("--gt", gt_path, "ground-truth tracks csv")->required();
  eval_cmd->add_option("--hyp", hyp_path, "hypothesis tracks csv")->required();
  eval_cmd->add_option("--iou", iou_thresh, "match threshold (default 0.5)");
  eval_cmd->add_option("--csv", eval_csv, "also write a one-line csv report");

  std::string cluster_hist, cluster_out;
  int cluster_k = 10;
  std::uint64_t cluster_seed = 1;
  CLI::App* cluster = app.add_subcommand("cluster", "build a color class model");
  cluster->add_option("--hist", cluster_hist, "histogram sidecar csv")->required();
  cluster->add_option("--k", cluster_k, "number of classes (default 10)");
  cluster->add_option("--seed", cluster_seed, "clustering seed (default 1)");
  cluster->add_option("--out", cluster_out, "output model file")->required();

  std::string synth_spec, synth_dir;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene");
  synth->add_option("--spec", synth_spec, "scene spec file")->required();
  synth->add_option("--out-dir", synth_dir, "output directory")->required();

  std::string bench_suite, bench_config, bench_dir;
  CLI::App* bench = app.add_subcommand("bench", "compare the tracker with the overlap baseline");
  bench->add_option("--suite", bench_suite, "suite config file")->required();
  bench->add_option("--config", bench_config, "tracker config file");
  bench->add_option("--out-dir", bench_dir, "directory for per-run csv rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;
  }

  try {
    if (track->parsed())
      return run_track(det_path, config_path, out_path, hist_path, model_path, frames_dir,
                       no_presolve, print_cfg);
    if (eval_cmd->parsed()) return run_eval(gt_path, hyp_path, iou_thresh, eval_csv);
    if (cluster->parsed()) return run_cluster(cluster_hist, cluster_k, cluster_seed, cluster_out);
    if (synth->parsed()) return run_synth(synth_spec, synth_dir);
    if (bench->parsed()) return run_bench(bench_suite, bench_config, bench_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
