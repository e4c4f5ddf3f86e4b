#pragma once

#include <optional>
#include <string>
#include <vector>

#include "homeostat/config.hpp"
#include "homeostat/dataset.hpp"
#include "homeostat/drift.hpp"
#include "homeostat/metrics.hpp"

namespace homeostat {

/// Train/validation data as loaded once per experiment.
struct LoadedData {
  Dataset train;
  Dataset validation;
};

LoadedData load_data(const ExperimentConfig& cfg);

struct ReplicateResult {
  std::vector<MetricsRow> rows;
  std::vector<SwapEvent> events;
  bool failed = false;
  std::string error;
};

/// One learner on one shift setting with one seed. The replicate gets its
/// own stratified subsets, weight init, stream and controller rng, all
/// derived from (config.seed + replicate).
ReplicateResult run_replicate(const ExperimentConfig& cfg, const LoadedData& data,
                              ControllerKind kind, const ShiftSchedule& schedule,
                              double reported_rate, int replicate);

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<std::string> failures;  // one message per aborted replicate
};

/// Full grid: every configured learner x shift setting x replicate, executed
/// on a bounded worker pool, reduced in deterministic cell order.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const LoadedData& data);

}  // namespace homeostat
