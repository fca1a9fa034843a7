#pragma once

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cptrack/cp/search.hpp"

namespace cptrack {

// Run configuration, parsed from `key=value` lines ('#' starts a comment).
// Unknown keys are rejected; missing keys keep their defaults.
struct Config {
  double min_conf = 0.3;
  double lambda_x = 40;
  double lambda_y = 40;
  int kappa = 30;
  int beta = 5;
  int tau_extra = 2;
  int beta_d = 4;
  int gamma_d = 5;
  bool fill_gaps = false;
  int lifespan = 3;
  double iou_min = 0.5;
  int k_classes = 10;
  long long c_occ = 300;
  long long c_stay = 30;
  double cost_scale = 1000;
  long long cross_class_cap = 700;
  int independence_gap = 10;
  long long batch_time_limit_ms = 2000;
  cp::SearchConfig::Mode mode = cp::SearchConfig::Mode::kMinimize;
};

namespace detail {

inline void validate_config(const Config& c) {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (c.min_conf < 0 || c.min_conf > 1) bad("min_conf must be in [0,1]");
  if (c.iou_min < 0 || c.iou_min > 1) bad("iou_min must be in [0,1]");
  if (c.lambda_x <= 0 || c.lambda_y <= 0) bad("lambda_x/lambda_y must be positive");
  if (c.beta < 0 || c.kappa <= c.beta) bad("need kappa > beta >= 0");
  if (c.tau_extra < 0) bad("tau_extra must be >= 0");
  if (c.beta_d < 0 || c.gamma_d < 0) bad("beta_d/gamma_d must be >= 0");
  if (c.lifespan < 1) bad("lifespan must be >= 1");
  if (c.k_classes < 1) bad("k_classes must be >= 1");
  if (c.c_occ < 0 || c.c_stay < 0) bad("c_occ/c_stay must be >= 0");
  if (c.cost_scale <= 0) bad("cost_scale must be positive");
  if (c.cross_class_cap < 0) bad("cross_class_cap must be >= 0");
  if (c.independence_gap < 0) bad("independence_gap must be >= 0");
  if (c.batch_time_limit_ms < 0) bad("batch_time_limit_ms must be >= 0");
}

}  // namespace detail

inline Config parse_config_text(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "min_conf") c.min_conf = std::stod(value);
      else if (key == "lambda_x") c.lambda_x = std::stod(value);
      else if (key == "lambda_y") c.lambda_y = std::stod(value);
      else if (key == "kappa") c.kappa = std::stoi(value);
      else if (key == "beta") c.beta = std::stoi(value);
      else if (key == "tau_extra") c.tau_extra = std::stoi(value);
      else if (key == "beta_d") c.beta_d = std::stoi(value);
      else if (key == "gamma_d") c.gamma_d = std::stoi(value);
      else if (key == "fill_gaps") {
        if (value == "on") c.fill_gaps = true;
        else if (value == "off") c.fill_gaps = false;
        else throw std::invalid_argument("fill_gaps must be on or off");
      } else if (key == "lifespan") c.lifespan = std::stoi(value);
      else if (key == "iou_min") c.iou_min = std::stod(value);
      else if (key == "k_classes") c.k_classes = std::stoi(value);
      else if (key == "c_occ") c.c_occ = std::stoll(value);
      else if (key == "c_stay") c.c_stay = std::stoll(value);
      else if (key == "cost_scale") c.cost_scale = std::stod(value);
      else if (key == "cross_class_cap") c.cross_class_cap = std::stoll(value);
      else if (key == "independence_gap") c.independence_gap = std::stoi(value);
      else if (key == "batch_time_limit_ms") c.batch_time_limit_ms = std::stoll(value);
      else if (key == "mode") {
        if (value == "minimize") c.mode = cp::SearchConfig::Mode::kMinimize;
        else if (value == "satisfy") c.mode = cp::SearchConfig::Mode::kSatisfy;
        else throw std::invalid_argument("mode must be minimize or satisfy");
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  detail::validate_config(c);
  return c;
}

inline std::string print_config(const Config& c) {
  std::ostringstream out;
  out << "min_conf=" << c.min_conf << "\n";
  out << "lambda_x=" << c.lambda_x << "\n";
  out << "lambda_y=" << c.lambda_y << "\n";
  out << "kappa=" << c.kappa << "\n";
  out << "beta=" << c.beta << "\n";
  out << "tau_extra=" << c.tau_extra << "\n";
  out << "beta_d=" << c.beta_d << "\n";
  out << "gamma_d=" << c.gamma_d << "\n";
  out << "fill_gaps=" << (c.fill_gaps ? "on" : "off") << "\n";
  out << "lifespan=" << c.lifespan << "\n";
  out << "iou_min=" << c.iou_min << "\n";
  out << "k_classes=" << c.k_classes << "\n";
  out << "c_occ=" << c.c_occ << "\n";
  out << "c_stay=" << c.c_stay << "\n";
  out << "cost_scale=" << c.cost_scale << "\n";
  out << "cross_class_cap=" << c.cross_class_cap << "\n";
  out << "independence_gap=" << c.independence_gap << "\n";
  out << "batch_time_limit_ms=" << c.batch_time_limit_ms << "\n";
  out << "mode=" << (c.mode == cp::SearchConfig::Mode::kMinimize ? "minimize" : "satisfy")
      << "\n";
  return out.str();
}

}  // namespace cptrack
