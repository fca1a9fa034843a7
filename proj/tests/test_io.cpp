#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "cptrack/io.hpp"

using namespace cptrack;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("parse_detections accepts the documented format") {
  const auto path = temp_file("cptrack_det.csv");
  write_text(path, "1,-1,10.5,20.0,30.0,40.0,0.9\n2,-1,5,5,10,10,0.7,3\n");
  const auto dets = parse_detections(path.string());
  REQUIRE(dets.size() == 2);
  CHECK(dets[0].frame == 1);
  CHECK(dets[0].box.left == 10.5);
  CHECK(dets[0].confidence == 0.9);
  CHECK(dets[0].label == 0);
  CHECK(dets[1].label == 3);
  std::filesystem::remove(path);
}

TEST_CASE("parse_detections accepts ten-column MOT rows") {
  const auto path = temp_file("cptrack_det_mot.csv");
  write_text(path, "1,-1,912.87,482.91,97.93,109.68,0.99,-1,-1,-1\n");
  const auto dets = parse_detections(path.string());
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].box.width == Catch::Approx(97.93));
  std::filesystem::remove(path);
}

TEST_CASE("parse_detections on an empty file returns nothing") {
  const auto path = temp_file("cptrack_det_empty.csv");
  write_text(path, "");
  CHECK(parse_detections(path.string()).empty());
  std::filesystem::remove(path);
}

TEST_CASE("parse_detections reports the offending line") {
  const auto path = temp_file("cptrack_det_bad.csv");
  SECTION("nonpositive size") {
    write_text(path, "1,-1,10,20,-5,40,0.9\n");
    CHECK_THROWS_WITH(parse_detections(path.string()),
                      Catch::Matchers::ContainsSubstring("line 1") &&
                          Catch::Matchers::ContainsSubstring("nonpositive"));
  }
  SECTION("wrong id") {
    write_text(path, "1,7,10,20,5,40,0.9\n");
    CHECK_THROWS_WITH(parse_detections(path.string()),
                      Catch::Matchers::ContainsSubstring("id -1"));
  }
  SECTION("garbage field") {
    write_text(path, "1,-1,10,20,abc,40,0.9\n");
    CHECK_THROWS_WITH(parse_detections(path.string()),
                      Catch::Matchers::ContainsSubstring("line 1"));
  }
  std::filesystem::remove(path);
}

TEST_CASE("track files round-trip byte-identically") {
  TrackSet ts;
  ts.tracks[1].push_back({1, Box{10.5, 20, 30, 40}, Provenance::kDetector});
  ts.tracks[1].push_back({2, Box{11.25, 21, 30, 40}, Provenance::kPredicted});
  ts.tracks[2].push_back({1, Box{100, 100, 24, 24}, Provenance::kInterpolated});

  const auto p1 = temp_file("cptrack_tracks1.csv");
  const auto p2 = temp_file("cptrack_tracks2.csv");
  write_tracks(ts, p1.string());
  const TrackSet back = parse_tracks(p1.string());
  REQUIRE(back.tracks.size() == 2);
  CHECK(back.tracks.at(1)[1].provenance == Provenance::kPredicted);
  write_tracks(back, p2.string());
  CHECK(read_text(p1) == read_text(p2));

  // Rows come out sorted by frame then track id.
  const std::string text = read_text(p1);
  CHECK(text.find("1,1,") < text.find("1,2,"));
  CHECK(text.find("1,2,") < text.find("2,1,"));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("write_tracks of an empty set writes an empty file") {
  const auto path = temp_file("cptrack_tracks_empty.csv");
  write_tracks(TrackSet{}, path.string());
  CHECK(read_text(path).empty());
  std::filesystem::remove(path);
}

TEST_CASE("histogram sidecar round-trips") {
  std::map<std::pair<int, int>, ColorHistogram> hists;
  hists[{1, 1}] = {0.25, 0.25, 0.5};
  hists[{1, 2}] = {0.1, 0.1, 0.8};
  hists[{3, 1}] = {0.0, 1.0, 0.0};
  const auto path = temp_file("cptrack_hists.csv");
  write_histograms(hists, path.string());
  const auto back = parse_histograms(path.string());
  REQUIRE(back.size() == 3);
  for (const auto& [key, h] : hists) {
    REQUIRE(back.count(key) == 1);
    for (std::size_t b = 0; b < h.size(); ++b)
      CHECK(back.at(key)[b] == Catch::Approx(h[b]).margin(1e-8));
  }
  std::filesystem::remove(path);
}

TEST_CASE("color model files round-trip") {
  ColorClassModel model;
  model.centers = {{0.5, 0.25, 0.25}, {0.0, 0.5, 0.5}};
  const auto path = temp_file("cptrack_model.txt");
  write_color_model(model, path.string());
  const ColorClassModel back = parse_color_model(path.string());
  REQUIRE(back.k() == 2);
  for (int k = 0; k < 2; ++k)
    for (std::size_t b = 0; b < 3; ++b)
      CHECK(back.centers[k][b] == Catch::Approx(model.centers[k][b]).margin(1e-8));
  std::filesystem::remove(path);
}

TEST_CASE("config parsing applies defaults, overrides and validation") {
  const Config def = parse_config_text("");
  CHECK(def.min_conf == 0.3);
  CHECK(def.kappa == 30);
  CHECK(def.beta == 5);
  CHECK(def.k_classes == 10);
  CHECK(def.mode == cp::SearchConfig::Mode::kMinimize);
  CHECK_FALSE(def.fill_gaps);

  const Config c = parse_config_text(
      "# comment\nmin_conf = 0.5\nkappa=20\nbeta=4  # trailing comment\nmode=satisfy\n"
      "fill_gaps=on\n");
  CHECK(c.min_conf == 0.5);
  CHECK(c.kappa == 20);
  CHECK(c.beta == 4);
  CHECK(c.mode == cp::SearchConfig::Mode::kSatisfy);
  CHECK(c.fill_gaps);

  CHECK_THROWS_WITH(parse_config_text("bogus_key=1\n"),
                    Catch::Matchers::ContainsSubstring("unknown key"));
  CHECK_THROWS_AS(parse_config_text("kappa=5\nbeta=5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("min_conf=1.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("mode=fastest\n"), std::invalid_argument);
}

TEST_CASE("printed config parses back to the same values") {
  Config c;
  c.min_conf = 0.45;
  c.kappa = 25;
  c.beta = 6;
  c.fill_gaps = true;
  c.mode = cp::SearchConfig::Mode::kSatisfy;
  const Config back = parse_config_text(print_config(c));
  CHECK(back.min_conf == c.min_conf);
  CHECK(back.kappa == c.kappa);
  CHECK(back.beta == c.beta);
  CHECK(back.fill_gaps == c.fill_gaps);
  CHECK(back.mode == c.mode);
  CHECK(print_config(back) == print_config(c));
}
