#include "homeostat/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace homeostat {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void fail(int line, const std::string& key, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ", key '" + key + "': " + what);
}

long parse_long(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    fail(line, key, "expected integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    fail(line, key, "expected number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line, key, "expected true/false, got '" + v + "'");
}

}  // namespace

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Homeostatic: return "homeostatic";
    case ControllerKind::RandomWalk: return "random";
    case ControllerKind::Constant: return "constant";
  }
  return "?";
}

ControllerKind controller_from_string(const std::string& s) {
  if (s == "homeostatic") return ControllerKind::Homeostatic;
  if (s == "random") return ControllerKind::RandomWalk;
  if (s == "constant") return ControllerKind::Constant;
  throw ConfigError("unknown learner kind '" + s + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (seen.count(key)) fail(line, key, "duplicate key (first at line " +
                                             std::to_string(seen[key]) + ")");
    seen[key] = line;

    if (key == "data_dir") cfg.data_dir = val;
    else if (key == "train_images") cfg.train_images = val;
    else if (key == "train_labels") cfg.train_labels = val;
    else if (key == "val_images") cfg.val_images = val;
    else if (key == "val_labels") cfg.val_labels = val;
    else if (key == "train_subset") cfg.train_subset = static_cast<int>(parse_long(val, line, key));
    else if (key == "val_subset") cfg.val_subset = static_cast<int>(parse_long(val, line, key));
    else if (key == "epochs") cfg.epochs = static_cast<int>(parse_long(val, line, key));
    else if (key == "epoch_length") cfg.epoch_length = parse_long(val, line, key);
    else if (key == "eval_interval") cfg.eval_interval = parse_long(val, line, key);
    else if (key == "learners") {
      cfg.learners.clear();
      for (const auto& item : split_list(val)) {
        try {
          cfg.learners.push_back(controller_from_string(item));
        } catch (const ConfigError& e) {
          fail(line, key, e.what());
        }
      }
    } else if (key == "shift_mode") {
      if (val == "constant") cfg.shift_mode = ShiftMode::ConstantRate;
      else if (val == "seasonal") cfg.shift_mode = ShiftMode::Seasonal;
      else fail(line, key, "expected constant|seasonal");
    } else if (key == "shift_rates") {
      cfg.shift_rates.clear();
      for (const auto& item : split_list(val))
        cfg.shift_rates.push_back(parse_double(item, line, key));
    } else if (key == "schedule") {
      if (val != "A" && val != "B") fail(line, key, "expected A or B");
      cfg.schedule = val[0];
    } else if (key == "storm_rate") cfg.storm_rate = parse_double(val, line, key);
    else if (key == "season_epochs") cfg.season_epochs = static_cast<int>(parse_long(val, line, key));
    else if (key == "lr_init") cfg.lr.lr_init = parse_double(val, line, key);
    else if (key == "lr_min") cfg.lr.lr_min = parse_double(val, line, key);
    else if (key == "lr_max") cfg.lr.lr_max = parse_double(val, line, key);
    else if (key == "lr_delta") cfg.lr.delta = parse_double(val, line, key);
    else if (key == "store_capacity") cfg.store_capacity = static_cast<int>(parse_long(val, line, key));
    else if (key == "cf_passes") cfg.cf_passes = static_cast<int>(parse_long(val, line, key));
    else if (key == "realized_effect") {
      if (val == "true_label") cfg.realized_effect = RealizedEffect::TrueLabel;
      else if (val == "predicted_label") cfg.realized_effect = RealizedEffect::PredictedLabel;
      else fail(line, key, "expected true_label|predicted_label");
    } else if (key == "replicates") cfg.replicates = static_cast<int>(parse_long(val, line, key));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(val, line, key));
    else if (key == "threads") cfg.threads = static_cast<int>(parse_long(val, line, key));
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "log_events") cfg.log_events = parse_bool(val, line, key);
    else if (key == "log_steps") cfg.log_steps = parse_bool(val, line, key);
    else fail(line, key, "unknown key");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  if (train_images.empty() || train_labels.empty() || val_images.empty() || val_labels.empty())
    throw ConfigError("dataset paths (train_images/train_labels/val_images/val_labels) are required");
  if (train_subset < 1 || val_subset < 1) throw ConfigError("subset sizes must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (epoch_length < 1) throw ConfigError("epoch_length must be >= 1");
  if (eval_interval < 1 || eval_interval > epoch_length)
    throw ConfigError("eval_interval must be in [1, epoch_length]");
  if (learners.empty()) throw ConfigError("at least one learner kind required");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (store_capacity < 1) throw ConfigError("store_capacity must be >= 1");
  if (cf_passes < 1) throw ConfigError("cf_passes must be >= 1");
  if (shift_mode == ShiftMode::ConstantRate && shift_rates.empty())
    throw ConfigError("constant shift mode needs shift_rates");
  for (double r : shift_rates)
    if (r < 0) throw ConfigError("shift rates must be >= 0");
  if (storm_rate < 0) throw ConfigError("storm_rate must be >= 0");
  if (season_epochs < 1) throw ConfigError("season_epochs must be >= 1");
  lr.validate();
}

std::string ExperimentConfig::resolve_path(const std::string& path) const {
  if (path.empty() || path.front() == '/') return path;
  std::string dir = data_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("HOMEOSTAT_DATA_DIR")) dir = env;
  }
  if (dir.empty()) return path;
  if (dir.back() != '/') dir += '/';
  return dir + path;
}

ShiftSchedule ExperimentConfig::seasonal_schedule() const {
  return schedule == 'A' ? schedule_a(epoch_length, storm_rate, season_epochs)
                         : schedule_b(epoch_length, storm_rate, season_epochs);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  auto kv = [&](const std::string& k, const auto& v) { out << k << " = " << v << '\n'; };
  if (!cfg.data_dir.empty()) kv("data_dir", cfg.data_dir);
  kv("train_images", cfg.train_images);
  kv("train_labels", cfg.train_labels);
  kv("val_images", cfg.val_images);
  kv("val_labels", cfg.val_labels);
  kv("train_subset", cfg.train_subset);
  kv("val_subset", cfg.val_subset);
  kv("epochs", cfg.epochs);
  kv("epoch_length", cfg.epoch_length);
  kv("eval_interval", cfg.eval_interval);
  std::string kinds;
  for (const auto& k : cfg.learners) kinds += (kinds.empty() ? "" : ",") + to_string(k);
  kv("learners", kinds);
  kv("shift_mode", cfg.shift_mode == ShiftMode::ConstantRate ? "constant" : "seasonal");
  std::string rates;
  for (double r : cfg.shift_rates) {
    std::ostringstream rs;
    rs.precision(17);
    rs << r;
    rates += (rates.empty() ? "" : ",") + rs.str();
  }
  kv("shift_rates", rates);
  kv("schedule", std::string(1, cfg.schedule));
  kv("storm_rate", cfg.storm_rate);
  kv("season_epochs", cfg.season_epochs);
  kv("lr_init", cfg.lr.lr_init);
  kv("lr_min", cfg.lr.lr_min);
  kv("lr_max", cfg.lr.lr_max);
  kv("lr_delta", cfg.lr.delta);
  kv("store_capacity", cfg.store_capacity);
  kv("cf_passes", cfg.cf_passes);
  kv("realized_effect",
     cfg.realized_effect == RealizedEffect::TrueLabel ? "true_label" : "predicted_label");
  kv("replicates", cfg.replicates);
  kv("seed", cfg.seed);
  kv("threads", cfg.threads);
  kv("out_dir", cfg.out_dir);
  kv("log_events", cfg.log_events ? "true" : "false");
  kv("log_steps", cfg.log_steps ? "true" : "false");
  return out.str();
}

}  // namespace homeostat
