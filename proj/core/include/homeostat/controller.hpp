#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>

#include "homeostat/mlp.hpp"

namespace homeostat {

/// Per-class effect on the learning rate when ingested: -1 inhibitory,
/// +1 excitatory. Default: classes 0-4 inhibit, 5-9 excite.
struct EffectMap {
  std::array<int, kNumClasses> direction{};

  static EffectMap standard() {
    EffectMap m;
    for (int c = 0; c < kNumClasses; ++c) m.direction[static_cast<std::size_t>(c)] = c < 5 ? -1 : +1;
    return m;
  }
};

inline int effect_of(int label, const EffectMap& map) {
  return map.direction.at(static_cast<std::size_t>(label));
}

enum class ControllerKind { Homeostatic, RandomWalk, Constant };
enum class RealizedEffect { TrueLabel, PredictedLabel };

/// Multiplicative LR update lr*(1 +/- delta), clamped to [lr_min, lr_max].
struct LrPolicy {
  double lr_init = 0.005;
  double lr_min = 1e-5;
  double lr_max = 0.5;
  double delta = 0.2;

  void validate() const;
};

double apply_effect(double lr, int direction, const LrPolicy& policy);

/// Ring buffer of recently seen (image, label-as-served) pairs. Labels are
/// never retro-relabeled after later concept shifts.
class ReplayStore {
 public:
  explicit ReplayStore(int capacity);

  void push(const Vec& image, int label);
  int size() const { return static_cast<int>(labels_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return labels_.empty(); }

  // Storage order: index 0 is the oldest entry.
  const Vec& image(int i) const { return images_.at(static_cast<std::size_t>(i)); }
  int label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }

  /// Contents as a batch (storage order) for vectorized evaluation.
  Batch as_batch() const;

 private:
  int capacity_;
  std::deque<Vec> images_;
  std::deque<int> labels_;
};

struct Decision {
  bool ingest = false;
  int predicted_label = -1;
  int expected_direction = 0;   // effect of the predicted label
  int realized_direction = 0;   // effect actually applied (0 until known / if rejected)
  // NaN when the store was empty and no branch was evaluated.
  double loss_ingest = std::numeric_limits<double>::quiet_NaN();
  double loss_reject = std::numeric_limits<double>::quiet_NaN();
};

struct HomeostatState {
  ControllerKind kind = ControllerKind::Homeostatic;
  LrPolicy policy;
  double lr = 0.005;
  ReplayStore store{100};
  EffectMap effects = EffectMap::standard();
  int cf_passes = 1;  // passes over the store per counterfactual branch
  RealizedEffect realized_effect = RealizedEffect::TrueLabel;
  std::mt19937_64 rng;  // random-walk directions only

  static HomeostatState make(ControllerKind kind, const LrPolicy& policy, int store_capacity,
                             std::uint64_t rng_seed);
};

struct StepLog {
  long presentation_index = 0;
  int predicted_label = -1;
  int true_label = -1;
  bool correct = false;
  std::optional<Decision> decision;  // homeostatic controller only
  double lr_before = 0.0;
  double lr_after = 0.0;
  double loss = 0.0;  // supervised per-step loss on the presented sample
};

/// Ingest-vs-reject by counterfactual self-evaluation: both candidates clone
/// the net, train one pass over the store (batch 1, storage order) at their
/// LR — ingest at apply_effect(lr, effect of predicted label), reject at the
/// unchanged lr — then score mean cross-entropy on the whole store. Ingest
/// iff its loss is strictly lower; ties and an empty store reject.
/// Never mutates `net`.
Decision counterfactual_decide(const Mlp& net, const HomeostatState& state,
                               int predicted_label);

StepLog homeostat_step(Mlp& net, HomeostatState& state, const Vec& image, int true_label,
                       long presentation_index);
StepLog random_step(Mlp& net, HomeostatState& state, const Vec& image, int true_label,
                    long presentation_index);
StepLog constant_step(Mlp& net, HomeostatState& state, const Vec& image, int true_label,
                      long presentation_index);

/// Dispatch on state.kind.
StepLog controller_step(Mlp& net, HomeostatState& state, const Vec& image, int true_label,
                        long presentation_index);

int predict_label(const Mlp& net, const Vec& image);

}  // namespace homeostat
