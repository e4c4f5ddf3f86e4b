#include "homeostat/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace homeostat {

namespace {

// Plain-array mirror of the network, so the oracle's arithmetic shares
// nothing with the Eigen implementation.
struct ScalarNet {
  std::vector<int> dims;
  std::vector<std::vector<std::vector<double>>> w;  // w[l][out][in]
  std::vector<std::vector<double>> b;               // b[l][out]
};

ScalarNet to_scalar(const Mlp& net) {
  ScalarNet s;
  s.dims = net.dims();
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto& wm = net.weights()[static_cast<std::size_t>(l)];
    std::vector<std::vector<double>> layer(static_cast<std::size_t>(wm.rows()));
    for (Eigen::Index i = 0; i < wm.rows(); ++i) {
      layer[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(wm.cols()));
      for (Eigen::Index j = 0; j < wm.cols(); ++j)
        layer[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = wm(i, j);
    }
    s.w.push_back(std::move(layer));
    const auto& bv = net.biases()[static_cast<std::size_t>(l)];
    s.b.emplace_back(bv.data(), bv.data() + bv.size());
  }
  return s;
}

double scalar_elu(double x) { return x > 0 ? x : std::expm1(x); }
double scalar_elu_grad(double x) { return x > 0 ? 1.0 : std::exp(x); }

// Forward pass; fills per-layer pre-activations and activations.
std::vector<double> forward_scalar(const ScalarNet& net, const std::vector<double>& x,
                                   std::vector<std::vector<double>>* preacts = nullptr,
                                   std::vector<std::vector<double>>* acts = nullptr) {
  std::vector<double> a = x;
  if (acts) acts->push_back(a);
  const int layers = static_cast<int>(net.w.size());
  for (int l = 0; l < layers; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const std::size_t out = net.b[ul].size();
    std::vector<double> z(out);
    for (std::size_t i = 0; i < out; ++i) {
      double acc = net.b[ul][i];
      for (std::size_t j = 0; j < a.size(); ++j) acc += net.w[ul][i][j] * a[j];
      z[i] = acc;
    }
    if (preacts) preacts->push_back(z);
    if (l + 1 < layers)
      for (auto& v : z) v = scalar_elu(v);
    a = std::move(z);
    if (acts) acts->push_back(a);
  }
  return a;
}

double xent_scalar(const std::vector<double>& logits, int label,
                   std::vector<double>* dlogits = nullptr) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(logits[i] - m);
    z += e[i];
  }
  if (dlogits) {
    dlogits->resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) (*dlogits)[i] = e[i] / z;
    (*dlogits)[static_cast<std::size_t>(label)] -= 1.0;
  }
  return -std::log(e[static_cast<std::size_t>(label)] / z);
}

void train_one(ScalarNet& net, const std::vector<double>& x, int label, double lr) {
  std::vector<std::vector<double>> preacts, acts;
  forward_scalar(net, x, &preacts, &acts);
  const int layers = static_cast<int>(net.w.size());
  std::vector<double> delta;
  xent_scalar(acts.back(), label, &delta);
  for (int l = layers - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    std::vector<double> prev_delta;
    if (l > 0) {
      const std::size_t in = acts[ul].size();
      prev_delta.assign(in, 0.0);
      for (std::size_t j = 0; j < in; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < delta.size(); ++i) acc += net.w[ul][i][j] * delta[i];
        prev_delta[j] = acc * scalar_elu_grad(preacts[ul - 1][j]);
      }
    }
    for (std::size_t i = 0; i < delta.size(); ++i) {
      for (std::size_t j = 0; j < acts[ul].size(); ++j)
        net.w[ul][i][j] -= lr * delta[i] * acts[ul][j];
      net.b[ul][i] -= lr * delta[i];
    }
    delta = std::move(prev_delta);
  }
}

double candidate_store_loss(const ScalarNet& start, const HomeostatState& state, double lr) {
  ScalarNet net = start;
  for (int pass = 0; pass < state.cf_passes; ++pass)
    for (int i = 0; i < state.store.size(); ++i) {
      const Vec& img = state.store.image(i);
      train_one(net, std::vector<double>(img.data(), img.data() + img.size()),
                state.store.label(i), lr);
    }
  double total = 0.0;
  for (int i = 0; i < state.store.size(); ++i) {
    const Vec& img = state.store.image(i);
    total += xent_scalar(
        forward_scalar(net, std::vector<double>(img.data(), img.data() + img.size())),
        state.store.label(i));
  }
  return total / state.store.size();
}

}  // namespace

Decision oracle_decide(const Mlp& net, const HomeostatState& state, int predicted_label) {
  Decision d;
  d.predicted_label = predicted_label;
  d.expected_direction = effect_of(predicted_label, state.effects);
  if (state.store.empty()) return d;

  const ScalarNet start = to_scalar(net);
  const double lr_ingest = std::clamp(state.lr * (1.0 + d.expected_direction * state.policy.delta),
                                      state.policy.lr_min, state.policy.lr_max);
  d.loss_ingest = candidate_store_loss(start, state, lr_ingest);
  d.loss_reject = candidate_store_loss(start, state, state.lr);
  d.ingest = d.loss_ingest < d.loss_reject;
  return d;
}

}  // namespace homeostat
