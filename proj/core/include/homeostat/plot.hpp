#pragma once

#include <string>
#include <vector>

#include "homeostat/metrics.hpp"

namespace homeostat {

/// What to draw from a set of aggregate rows.
struct PlotSpec {
  enum class Metric { Accuracy, LearningRate };
  Metric metric = Metric::Accuracy;
  std::string title;
  std::vector<double> rates;  // empty = all rates present
  bool log_y = false;         // handy for LR traces
  int width = 860;
  int height = 520;
};

/// Static line chart: one mean trace plus a shaded +/-SEM band per
/// (learner, rate) series. Colors: homeostatic blue, random green,
/// constant red. Throws ConfigurationError when the selection is empty.
std::string render_plot(const std::vector<AggregateRow>& aggregates, const PlotSpec& spec);

void write_plot(const std::vector<AggregateRow>& aggregates, const PlotSpec& spec,
                const std::string& path);

/// Reads the `plot` subcommand's spec file (key = value: metric, title,
/// rates, log_y, width, height).
PlotSpec parse_plot_spec(const std::string& text);

/// Reads back an aggregate CSV written by write_aggregate_csv.
std::vector<AggregateRow> read_aggregate_csv(const std::string& path);

}  // namespace homeostat
