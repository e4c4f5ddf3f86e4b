#pragma once

#include <string>
#include <vector>

#include "homeostat/config.hpp"

namespace homeostat {

struct MetricsRow {
  int replicate = 0;
  ControllerKind learner = ControllerKind::Constant;
  double shift_rate = 0.0;  // seasonal runs report the storm rate
  int epoch = 0;
  long presentation = 0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double ingest_rate = 0.0;      // NaN for non-homeostatic learners
  double train_accuracy = 0.0;   // prediction accuracy over the interval
};

struct AggregateRow {
  ControllerKind learner = ControllerKind::Constant;
  double shift_rate = 0.0;
  int epoch = 0;
  double acc_mean = 0.0;
  double acc_sem = 0.0;
  double lr_mean = 0.0;
  double lr_sem = 0.0;
  int n_replicates = 0;
};

/// Sample mean and standard error (sd with n-1 denominator, over sqrt(n)).
struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
};
MeanSem mean_sem(const std::vector<double>& values);

/// Per-(kind, rate, epoch) aggregation of the epoch-end evaluation row of
/// each replicate.
std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows);

// Column schemas are fixed; floats use 9 significant digits.
void write_csv(const std::vector<MetricsRow>& rows, const std::string& path);
void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path);

std::string format_double(double v);

}  // namespace homeostat
