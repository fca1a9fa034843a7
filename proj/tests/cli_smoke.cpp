#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "cptrack/image.hpp"
#include "cptrack/io.hpp"
#include "cptrack/metrics.hpp"

using namespace cptrack;
namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::temp_directory_path() / "cptrack_cli_smoke";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(CPTRACK_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("cli walkthrough: synth, track, eval, cluster, bench") {
  Workdir w;
  write_text(w / "scene.cfg",
             "seed=5\nframes=30\nclasses=2\n"
             "object=1,30,50,100,4,0,24,24,1\n"
             "object=1,30,590,300,-4,0,24,24,2\n"
             "occlusion=1,12,13\n");
  REQUIRE(run("synth --spec " + (w / "scene.cfg") + " --out-dir " + (w / "scene")) == 0);
  REQUIRE(fs::exists(w / "scene/gt.csv"));
  REQUIRE(fs::exists(w / "scene/det.csv"));
  REQUIRE(fs::exists(w / "scene/hist.csv"));
  REQUIRE(fs::exists(w / "scene/model.txt"));

  write_text(w / "run.cfg", "kappa=15\nbeta=3\n");
  REQUIRE(run("track --det " + (w / "scene/det.csv") + " --config " + (w / "run.cfg") +
              " --hist " + (w / "scene/hist.csv") + " --color-model " + (w / "scene/model.txt") +
              " --out " + (w / "tracks.csv")) == 0);
  REQUIRE(fs::exists(w / "tracks.csv"));

  REQUIRE(run("eval --gt " + (w / "scene/gt.csv") + " --hyp " + (w / "tracks.csv") + " --csv " +
              (w / "report.csv")) == 0);
  REQUIRE(fs::exists(w / "report.csv"));

  // The tracked scene with a short occlusion should evaluate perfectly.
  const TrackSet gt = parse_tracks(w / "scene/gt.csv");
  const TrackSet hyp = parse_tracks(w / "tracks.csv");
  const MetricsReport r = evaluate(gt, hyp, 0.5);
  CHECK(r.mota == 1.0);
  CHECK(r.ids == 0);

  REQUIRE(run("cluster --hist " + (w / "scene/hist.csv") + " --k 2 --seed 3 --out " +
              (w / "model2.txt")) == 0);
  REQUIRE(fs::exists(w / "model2.txt"));

  write_text(w / "suite.cfg",
             "runs=1\nframes=16\nobjects=2\ncrossing=off\nocclusion_len=0\njitter_sigma=0\n");
  write_text(w / "bench.cfg", "kappa=8\nbeta=2\n");
  REQUIRE(run("bench --suite " + (w / "suite.cfg") + " --config " + (w / "bench.cfg") +
              " --out-dir " + (w / "bench")) == 0);
  REQUIRE(fs::exists(w / "bench/bench.csv"));
}

TEST_CASE("cli track can extract histograms from ppm frames") {
  Workdir w;
  fs::create_directories(w / "frames");
  // Six frames, one red and one blue object on constant backgrounds.
  for (int f = 1; f <= 6; ++f) {
    Image img{64, 64, std::vector<std::uint8_t>(64 * 64 * 3, 40)};
    auto paint = [&img](int x0, int y0, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
      for (int y = y0; y < y0 + 12; ++y)
        for (int x = x0; x < x0 + 12; ++x) {
          img.rgb[(y * 64 + x) * 3 + 0] = r;
          img.rgb[(y * 64 + x) * 3 + 1] = g;
          img.rgb[(y * 64 + x) * 3 + 2] = b;
        }
    };
    paint(4 + f, 10, 250, 10, 10);
    paint(40, 40, 10, 10, 250);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06d.ppm", f);
    write_ppm((fs::path(w / "frames") / name).string(), img);
  }
  std::string rows;
  for (int f = 1; f <= 6; ++f) {
    rows += std::to_string(f) + ",-1," + std::to_string(4 + f) + ",10,12,12,0.9\n";
    rows += std::to_string(f) + ",-1,40,40,12,12,0.9\n";
  }
  write_text(w / "det.csv", rows);
  // A two-class model: red-heavy and blue-heavy joint histograms.
  ColorHistogram red(kJointHistogramBins, 0.0), blue(kJointHistogramBins, 0.0);
  red[(7 * 8 + 0) * 8 + 0] = 1.0;
  blue[(0 * 8 + 0) * 8 + 7] = 1.0;
  write_color_model(ColorClassModel{{red, blue}}, w / "model.txt");

  REQUIRE(run("track --det " + (w / "det.csv") + " --frames " + (w / "frames") +
              " --color-model " + (w / "model.txt") + " --out " + (w / "t.csv")) == 0);
  const TrackSet tracks = parse_tracks(w / "t.csv");
  CHECK(tracks.tracks.size() == 2);
}

TEST_CASE("cli exit codes distinguish usage and data errors") {
  Workdir w;
  CHECK(run("definitely-not-a-subcommand") == 1);
  CHECK(run("track --out x.csv") == 1);  // missing required --det

  write_text(w / "bad.csv", "1,-1,10,20,-5,40,0.9\n");
  CHECK(run("track --det " + (w / "bad.csv") + " --out " + (w / "out.csv")) == 2);

  write_text(w / "bad.cfg", "bogus=1\n");
  write_text(w / "ok.csv", "1,-1,10,20,5,40,0.9\n");
  CHECK(run("track --det " + (w / "ok.csv") + " --config " + (w / "bad.cfg") + " --out " +
            (w / "out.csv")) == 2);

  CHECK(run("eval --gt " + (w / "missing.csv") + " --hyp " + (w / "missing.csv")) == 2);
}

TEST_CASE("track --print-config echoes the effective configuration") {
  Workdir w;
  write_text(w / "run.cfg", "kappa=21\nbeta=4\nmode=satisfy\n");
  write_text(w / "det.csv", "1,-1,10,20,30,40,0.9\n");
  const std::string cmd = std::string(CPTRACK_BIN) + " track --det " + (w / "det.csv") +
                          " --config " + (w / "run.cfg") + " --out " + (w / "t.csv") +
                          " --print-config > " + (w / "cfg.txt") + " 2>/dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  std::ifstream in(w / "cfg.txt");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("kappa=21") != std::string::npos);
  CHECK(text.find("beta=4") != std::string::npos);
  CHECK(text.find("mode=satisfy") != std::string::npos);
  CHECK(text.find("min_conf=0.3") != std::string::npos);  // defaults echoed too
}
