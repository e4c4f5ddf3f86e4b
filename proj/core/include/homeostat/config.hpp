#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "homeostat/controller.hpp"
#include "homeostat/drift.hpp"

namespace homeostat {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything a run needs, parsed from line-oriented `key = value` text
/// (# comments, unknown keys rejected).
struct ExperimentConfig {
  // dataset
  std::string data_dir;  // prefix for relative paths; falls back to $HOMEOSTAT_DATA_DIR
  std::string train_images;
  std::string train_labels;
  std::string val_images;
  std::string val_labels;
  int train_subset = 5000;
  int val_subset = 1000;

  // run shape
  int epochs = 20;
  long epoch_length = 5000;
  long eval_interval = 1000;
  std::vector<ControllerKind> learners = {ControllerKind::Homeostatic,
                                          ControllerKind::RandomWalk,
                                          ControllerKind::Constant};

  // shift
  ShiftMode shift_mode = ShiftMode::ConstantRate;
  std::vector<double> shift_rates = {0.0};  // swaps per epoch, constant mode
  char schedule = 'A';                      // seasonal mode: A or B
  double storm_rate = 50.0;                 // seasonal local maximum
  int season_epochs = 10;                   // epochs per seasonal segment

  // controller constants
  LrPolicy lr;
  int store_capacity = 100;
  int cf_passes = 1;
  RealizedEffect realized_effect = RealizedEffect::TrueLabel;

  // replication and output
  int replicates = 5;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "out";
  bool log_events = false;
  bool log_steps = false;

  void validate() const;
  /// Path resolved against data_dir (or $HOMEOSTAT_DATA_DIR) when relative.
  std::string resolve_path(const std::string& path) const;
  ShiftSchedule seasonal_schedule() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

std::string to_string(ControllerKind kind);
ControllerKind controller_from_string(const std::string& s);

}  // namespace homeostat
