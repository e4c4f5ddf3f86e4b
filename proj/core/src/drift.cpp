#include "homeostat/drift.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "homeostat/rng.hpp"

namespace homeostat {

ShiftSchedule ShiftSchedule::constant(double rate, long epoch_length) {
  if (rate < 0) throw ConfigurationError("shift rate must be >= 0");
  if (epoch_length < 1) throw ConfigurationError("epoch_length must be >= 1");
  ShiftSchedule s;
  s.mode = ShiftMode::ConstantRate;
  s.rate_per_epoch = rate;
  s.epoch_length = epoch_length;
  return s;
}

ShiftSchedule ShiftSchedule::seasonal(std::vector<SeasonalSegment> segments, long epoch_length) {
  if (segments.empty()) throw ConfigurationError("seasonal schedule needs segments");
  for (const auto& seg : segments) {
    if (seg.epochs < 1) throw ConfigurationError("seasonal segment span must be >= 1");
    if (seg.rate_per_epoch < 0) throw ConfigurationError("shift rate must be >= 0");
  }
  if (epoch_length < 1) throw ConfigurationError("epoch_length must be >= 1");
  ShiftSchedule s;
  s.mode = ShiftMode::Seasonal;
  s.segments = std::move(segments);
  s.epoch_length = epoch_length;
  return s;
}

double ShiftSchedule::rate_at(int epoch) const {
  if (epoch < 0) throw ConfigurationError("epoch must be >= 0");
  if (mode == ShiftMode::ConstantRate) return rate_per_epoch;
  int start = 0;
  for (const auto& seg : segments) {
    if (epoch < start + seg.epochs) return seg.rate_per_epoch;
    start += seg.epochs;
  }
  return segments.back().rate_per_epoch;  // persists past the schedule
}

ShiftSchedule schedule_a(long epoch_length, double storm_rate, int segment_epochs) {
  // calm / storm / calm / storm / calm
  return ShiftSchedule::seasonal({{segment_epochs, 0.0},
                                  {segment_epochs, storm_rate},
                                  {segment_epochs, 0.0},
                                  {segment_epochs, storm_rate},
                                  {segment_epochs, 0.0}},
                                 epoch_length);
}

ShiftSchedule schedule_b(long epoch_length, double storm_rate, int segment_epochs) {
  // stepped ramp up and back down
  return ShiftSchedule::seasonal({{segment_epochs, 0.0},
                                  {segment_epochs, storm_rate / 10.0},
                                  {segment_epochs, storm_rate},
                                  {segment_epochs, storm_rate / 10.0},
                                  {segment_epochs, 0.0}},
                                 epoch_length);
}

std::vector<SwapEvent> swap_events_for_epoch(const ShiftSchedule& schedule, int epoch,
                                             std::mt19937_64& rng) {
  const double r = schedule.rate_at(epoch);
  const long e = schedule.epoch_length;
  if (r > static_cast<double>(e))
    throw ConfigurationError("shift rate exceeds epoch length (more than one swap per presentation)");
  std::vector<SwapEvent> events;
  if (r <= 0.0) return events;
  const long spacing = static_cast<long>(static_cast<double>(e) / r);
  if (spacing < 1) throw ConfigurationError("swap spacing underflow");
  std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
  for (long off = spacing; off <= e; off += spacing) {
    SwapEvent ev;
    ev.presentation_index = static_cast<long>(epoch) * e + off;
    ev.epoch = epoch;
    ev.class_a = cls(rng);
    do {
      ev.class_b = cls(rng);
    } while (ev.class_b == ev.class_a);
    events.push_back(ev);
  }
  return events;
}

DriftStream::DriftStream(const Dataset& data, ShiftSchedule schedule, std::uint64_t seed)
    : data_(&data),
      schedule_(std::move(schedule)),
      event_rng_(make_rng(seed, 0xE7E)),
      shuffle_rng_(make_rng(seed, 0x5F0)) {
  if (data.size() == 0) throw ConfigurationError("stream: empty dataset");
  start_epoch(0);
}

void DriftStream::start_epoch(int epoch) {
  auto events = swap_events_for_epoch(schedule_, epoch, event_rng_);
  pending_ = std::move(events);
  pending_pos_ = 0;
  order_.resize(static_cast<std::size_t>(data_->size()));
  std::iota(order_.begin(), order_.end(), 0);
  std::shuffle(order_.begin(), order_.end(), shuffle_rng_);
  order_pos_ = 0;
}

Presentation DriftStream::next() {
  Presentation p;
  const long e = schedule_.epoch_length;
  if (index_ > 0 && index_ % e == 0) {
    // Events scheduled at the epoch boundary fire before the new epoch.
    while (pending_pos_ < pending_.size() &&
           pending_[pending_pos_].presentation_index == index_) {
      const SwapEvent& ev = pending_[pending_pos_++];
      perm_ = swap_pair(perm_, ev.class_a, ev.class_b);
      event_log_.push_back(ev);
      p.fired.push_back(ev);
    }
    start_epoch(static_cast<int>(index_ / e));
  }
  while (pending_pos_ < pending_.size() &&
         pending_[pending_pos_].presentation_index == index_) {
    const SwapEvent& ev = pending_[pending_pos_++];
    perm_ = swap_pair(perm_, ev.class_a, ev.class_b);
    event_log_.push_back(ev);
    p.fired.push_back(ev);
  }
  if (order_pos_ >= order_.size()) {
    // epoch longer than the dataset: reshuffle and keep serving
    std::shuffle(order_.begin(), order_.end(), shuffle_rng_);
    order_pos_ = 0;
  }
  p.sample = order_[order_pos_++];
  p.label = perm_.relabel(data_->raw_labels[static_cast<std::size_t>(p.sample)]);
  ++index_;
  return p;
}

void write_event_log(const std::vector<SwapEvent>& events, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "presentation_index,epoch,class_a,class_b\n";
  for (const auto& ev : events)
    f << ev.presentation_index << ',' << ev.epoch << ',' << ev.class_a << ',' << ev.class_b
      << '\n';
  if (!f) throw IoError("write failed for " + path);
}

}  // namespace homeostat
