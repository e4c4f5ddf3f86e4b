#include "homeostat/controller.hpp"

#include <algorithm>
#include <cmath>

namespace homeostat {

void LrPolicy::validate() const {
  if (lr_min <= 0 || lr_max <= 0 || lr_init <= 0 || delta <= 0)
    throw ConfigurationError("lr policy: all constants must be positive");
  if (lr_min > lr_max) throw ConfigurationError("lr policy: lr_min > lr_max");
  if (lr_init < lr_min || lr_init > lr_max)
    throw ConfigurationError("lr policy: lr_init outside [lr_min, lr_max]");
}

double apply_effect(double lr, int direction, const LrPolicy& policy) {
  if (direction != -1 && direction != 1)
    throw ConfigurationError("apply_effect: direction must be -1 or +1");
  return std::clamp(lr * (1.0 + direction * policy.delta), policy.lr_min, policy.lr_max);
}

ReplayStore::ReplayStore(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw ConfigurationError("replay store capacity must be >= 1");
}

void ReplayStore::push(const Vec& image, int label) {
  if (size() == capacity_) {
    images_.pop_front();
    labels_.pop_front();
  }
  images_.push_back(image);
  labels_.push_back(label);
}

Batch ReplayStore::as_batch() const {
  Batch b;
  if (empty()) return b;
  b.images.resize(images_.front().size(), size());
  for (int i = 0; i < size(); ++i) b.images.col(i) = images_[static_cast<std::size_t>(i)];
  b.labels.assign(labels_.begin(), labels_.end());
  return b;
}

HomeostatState HomeostatState::make(ControllerKind kind, const LrPolicy& policy,
                                    int store_capacity, std::uint64_t rng_seed) {
  policy.validate();
  HomeostatState s;
  s.kind = kind;
  s.policy = policy;
  s.lr = policy.lr_init;
  s.store = ReplayStore(store_capacity);
  s.rng.seed(rng_seed);
  return s;
}

int predict_label(const Mlp& net, const Vec& image) {
  const Mat logits = net.forward(image);
  Eigen::Index argmax = 0;
  logits.col(0).maxCoeff(&argmax);
  return static_cast<int>(argmax);
}

namespace {

// One branch of the counterfactual: train a clone over the store at the
// candidate LR, then score it on the store.
double branch_loss(const Mlp& net, const ReplayStore& store, double lr, int passes) {
  Mlp candidate = net;
  Gradients grads = candidate.zero_gradients();
  Batch one;
  for (int pass = 0; pass < passes; ++pass) {
    for (int i = 0; i < store.size(); ++i) {
      one.images = store.image(i);
      one.labels = {store.label(i)};
      candidate.backward(one, grads);
      candidate.sgd_step_unchecked(grads, lr);
    }
  }
  const Batch all = store.as_batch();
  return softmax_xent(candidate.forward(all.images), all.labels);
}

StepLog supervised_step(Mlp& net, HomeostatState& state, const Vec& image, int true_label,
                        long presentation_index, int predicted) {
  StepLog log;
  log.presentation_index = presentation_index;
  log.predicted_label = predicted;
  log.true_label = true_label;
  log.correct = predicted == true_label;
  Batch one;
  one.images = image;
  one.labels = {true_label};
  Gradients grads = net.zero_gradients();
  log.loss = net.backward(one, grads);
  if (!std::isfinite(log.loss)) throw NumericError("training loss is non-finite");
  net.sgd_step(grads, state.lr);
  return log;
}

}  // namespace

Decision counterfactual_decide(const Mlp& net, const HomeostatState& state,
                               int predicted_label) {
  Decision d;
  d.predicted_label = predicted_label;
  d.expected_direction = effect_of(predicted_label, state.effects);
  if (state.store.empty()) return d;  // reject: nothing to judge against

  const double lr_ingest = apply_effect(state.lr, d.expected_direction, state.policy);
  const double lr_reject = state.lr;
  d.loss_ingest = branch_loss(net, state.store, lr_ingest, state.cf_passes);
  d.loss_reject = branch_loss(net, state.store, lr_reject, state.cf_passes);
  d.ingest = d.loss_ingest < d.loss_reject;  // strict; ties reject
  return d;
}

StepLog homeostat_step(Mlp& net, HomeostatState& state, const Vec& image, int true_label,
                       long presentation_index) {
  const int predicted = predict_label(net, image);
  Decision decision = counterfactual_decide(net, state, predicted);
  const double lr_before = state.lr;
  if (decision.ingest) {
    const int effect_label =
        state.realized_effect == RealizedEffect::TrueLabel ? true_label : predicted;
    decision.realized_direction = effect_of(effect_label, state.effects);
    state.lr = apply_effect(state.lr, decision.realized_direction, state.policy);
  }
  StepLog log = supervised_step(net, state, image, true_label, presentation_index, predicted);
  state.store.push(image, true_label);
  log.decision = decision;
  log.lr_before = lr_before;
  log.lr_after = state.lr;
  return log;
}

StepLog random_step(Mlp& net, HomeostatState& state, const Vec& image, int true_label,
                    long presentation_index) {
  const double lr_before = state.lr;
  std::uniform_int_distribution<int> coin(0, 1);
  state.lr = apply_effect(state.lr, coin(state.rng) ? +1 : -1, state.policy);
  const int predicted = predict_label(net, image);
  StepLog log = supervised_step(net, state, image, true_label, presentation_index, predicted);
  state.store.push(image, true_label);  // parity of memory cost; never read
  log.lr_before = lr_before;
  log.lr_after = state.lr;
  return log;
}

StepLog constant_step(Mlp& net, HomeostatState& state, const Vec& image, int true_label,
                      long presentation_index) {
  state.lr = state.policy.lr_init;
  const int predicted = predict_label(net, image);
  StepLog log = supervised_step(net, state, image, true_label, presentation_index, predicted);
  log.lr_before = state.lr;
  log.lr_after = state.lr;
  return log;
}

StepLog controller_step(Mlp& net, HomeostatState& state, const Vec& image, int true_label,
                        long presentation_index) {
  switch (state.kind) {
    case ControllerKind::Homeostatic:
      return homeostat_step(net, state, image, true_label, presentation_index);
    case ControllerKind::RandomWalk:
      return random_step(net, state, image, true_label, presentation_index);
    case ControllerKind::Constant:
      return constant_step(net, state, image, true_label, presentation_index);
  }
  throw ConfigurationError("unknown controller kind");
}

}  // namespace homeostat
