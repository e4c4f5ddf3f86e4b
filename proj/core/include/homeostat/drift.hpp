#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "homeostat/dataset.hpp"
#include "homeostat/permutation.hpp"

namespace homeostat {

enum class ShiftMode { ConstantRate, Seasonal };

struct SeasonalSegment {
  int epochs = 0;           // span length
  double rate_per_epoch = 0.0;
};

/// When label swaps happen: a flat rate, or piecewise-constant seasons.
struct ShiftSchedule {
  ShiftMode mode = ShiftMode::ConstantRate;
  double rate_per_epoch = 0.0;
  std::vector<SeasonalSegment> segments;  // seasonal mode only
  long epoch_length = 50000;              // presentations per epoch

  static ShiftSchedule constant(double rate, long epoch_length);
  static ShiftSchedule seasonal(std::vector<SeasonalSegment> segments, long epoch_length);

  /// Rate in effect for this epoch (last segment persists past the end).
  double rate_at(int epoch) const;
};

/// Canned season shapes. `storm_rate` is the local maximum shift rate.
/// A: hard calm/storm cycling; B: stepped ramp up and back down.
ShiftSchedule schedule_a(long epoch_length, double storm_rate, int segment_epochs = 10);
ShiftSchedule schedule_b(long epoch_length, double storm_rate, int segment_epochs = 8);

struct SwapEvent {
  long presentation_index = 0;  // global, 0-based; fires before serving it
  int epoch = 0;
  int class_a = 0;
  int class_b = 0;
};

/// Deterministically spaced swap offsets for one epoch: at rate r the events
/// sit at k*floor(E/r) within the epoch, class pairs drawn uniformly from the
/// 45 unordered pairs. Offsets are 1-based within the epoch; offset E lands
/// on the next epoch's first presentation.
std::vector<SwapEvent> swap_events_for_epoch(const ShiftSchedule& schedule, int epoch,
                                             std::mt19937_64& rng);

struct Presentation {
  Eigen::Index sample;  // column in the dataset
  int label;            // relabeled through the current permutation
  std::vector<SwapEvent> fired;
};

/// Infinite presentation stream over a dataset: per-epoch seeded shuffle,
/// swap events applied as scheduled. Single-owner; deterministic in
/// (dataset, schedule, seed).
class DriftStream {
 public:
  DriftStream(const Dataset& data, ShiftSchedule schedule, std::uint64_t seed);

  Presentation next();

  const LabelPermutation& permutation() const { return perm_; }
  long presentation_index() const { return index_; }
  int epoch() const { return static_cast<int>(index_ / schedule_.epoch_length); }
  const std::vector<SwapEvent>& event_log() const { return event_log_; }
  const Dataset& dataset() const { return *data_; }

  Eigen::VectorXd image(const Presentation& p) const { return data_->images.col(p.sample); }

 private:
  void start_epoch(int epoch);

  const Dataset* data_;
  ShiftSchedule schedule_;
  LabelPermutation perm_ = LabelPermutation::identity();
  long index_ = 0;
  std::mt19937_64 event_rng_;
  std::mt19937_64 shuffle_rng_;
  std::vector<int> order_;
  std::size_t order_pos_ = 0;
  std::vector<SwapEvent> pending_;  // current epoch, ascending
  std::size_t pending_pos_ = 0;
  std::vector<SwapEvent> event_log_;
};

/// CSV export: presentation_index,epoch,class_a,class_b.
void write_event_log(const std::vector<SwapEvent>& events, const std::string& path);

}  // namespace homeostat
