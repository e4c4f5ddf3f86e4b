#include "homeostat/mlp.hpp"

#include <cmath>
#include <string>

namespace homeostat {

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

namespace {

void apply_elu(Mat& m) {
  m = m.unaryExpr([](double x) { return elu(x); });
}

}  // namespace

void Batch::validate(int input_dim, int num_classes) const {
  if (images.cols() != static_cast<Eigen::Index>(labels.size()))
    throw ConfigurationError("batch: image/label count mismatch");
  if (labels.empty()) throw ConfigurationError("batch: empty");
  if (images.rows() != input_dim)
    throw ConfigurationError("batch: expected input dim " + std::to_string(input_dim) +
                             ", got " + std::to_string(images.rows()));
  if ((images.array() < 0.0).any() || (images.array() > 1.0).any())
    throw ConfigurationError("batch: pixel outside [0,1]");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw ConfigurationError("batch: label out of range");
}

Mat he_init(int fan_in, int fan_out, std::mt19937_64& rng) {
  if (fan_in < 1 || fan_out < 1) throw ConfigurationError("he_init: fan dims must be >= 1");
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  Mat w(fan_out, fan_in);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
  return w;
}

Mlp::Mlp(std::vector<int> dims, std::mt19937_64& rng) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw ConfigurationError("mlp: need at least input and output layer");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    weights_.push_back(he_init(dims_[l], dims_[l + 1], rng));
    biases_.push_back(Vec::Zero(dims_[l + 1]));
  }
}

Mat Mlp::forward(const Mat& images) const {
  if (images.rows() != input_dim())
    throw ConfigurationError("forward: input dim " + std::to_string(images.rows()) +
                             " != " + std::to_string(input_dim()));
  Mat a = images;
  for (int l = 0; l < num_layers(); ++l) {
    Mat z = (weights_[static_cast<std::size_t>(l)] * a).colwise() +
            biases_[static_cast<std::size_t>(l)];
    if (l + 1 < num_layers()) apply_elu(z);
    a = std::move(z);
  }
  return a;
}

double softmax_xent(const Mat& logits, const std::vector<int>& labels, Mat* dlogits) {
  const Eigen::Index n = logits.cols();
  if (n != static_cast<Eigen::Index>(labels.size()))
    throw ConfigurationError("softmax_xent: logits/labels count mismatch");
  double loss = 0.0;
  Mat probs(logits.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = logits.col(i).maxCoeff();
    Vec e = (logits.col(i).array() - m).exp();
    const double z = e.sum();
    probs.col(i) = e / z;
    loss -= std::log(probs(labels[static_cast<std::size_t>(i)], i));
  }
  loss /= static_cast<double>(n);
  if (dlogits) {
    *dlogits = probs / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i)
      (*dlogits)(labels[static_cast<std::size_t>(i)], i) -= 1.0 / static_cast<double>(n);
  }
  return loss;
}

double Mlp::backward(const Batch& batch, Gradients& grads) const {
  const int L = num_layers();
  // Forward with cached pre-activations.
  std::vector<Mat> activations;   // activations[l] = input to layer l
  std::vector<Mat> preacts(static_cast<std::size_t>(L));
  activations.reserve(static_cast<std::size_t>(L) + 1);
  activations.push_back(batch.images);
  for (int l = 0; l < L; ++l) {
    Mat z = (weights_[static_cast<std::size_t>(l)] * activations.back()).colwise() +
            biases_[static_cast<std::size_t>(l)];
    preacts[static_cast<std::size_t>(l)] = z;
    if (l + 1 < L) apply_elu(z);
    activations.push_back(std::move(z));
  }

  Mat delta;
  const double loss = softmax_xent(activations.back(), batch.labels, &delta);

  if (grads.w.size() != static_cast<std::size_t>(L)) grads = zero_gradients();
  for (int l = L - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    grads.w[ul].noalias() = delta * activations[ul].transpose();
    grads.b[ul] = delta.rowwise().sum();
    if (l > 0) {
      Mat back = weights_[ul].transpose() * delta;
      delta = back.array() *
              preacts[ul - 1].unaryExpr([](double x) { return elu_grad(x); }).array();
    }
  }
  return loss;
}

void Mlp::sgd_step(const Gradients& grads, double lr) {
  for (int l = 0; l < num_layers(); ++l) {
    const auto ul = static_cast<std::size_t>(l);
    if (!grads.w[ul].allFinite() || !grads.b[ul].allFinite())
      throw NumericError("sgd_step: non-finite gradient at layer " + std::to_string(l));
    weights_[ul].noalias() -= lr * grads.w[ul];
    biases_[ul].noalias() -= lr * grads.b[ul];
  }
}

void Mlp::sgd_step_unchecked(const Gradients& grads, double lr) {
  // Hot path for counterfactual branch training: a non-finite gradient
  // propagates into the scored loss, so the per-step scan is skipped.
  for (int l = 0; l < num_layers(); ++l) {
    const auto ul = static_cast<std::size_t>(l);
    weights_[ul].noalias() -= lr * grads.w[ul];
    biases_[ul].noalias() -= lr * grads.b[ul];
  }
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  for (int l = 0; l < num_layers(); ++l) {
    const auto ul = static_cast<std::size_t>(l);
    g.w.push_back(Mat::Zero(weights_[ul].rows(), weights_[ul].cols()));
    g.b.push_back(Vec::Zero(biases_[ul].size()));
  }
  return g;
}

bool Mlp::operator==(const Mlp& other) const {
  if (dims_ != other.dims_) return false;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) return false;
  }
  return true;
}

EvalResult evaluate(const Mlp& net, const Batch& data, const LabelPermutation& perm) {
  if (data.size() == 0) throw ConfigurationError("evaluate: empty batch");
  std::vector<int> shifted(data.labels.size());
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    shifted[i] = perm.relabel(data.labels[i]);
  const Mat logits = net.forward(data.images);
  int correct = 0;
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    Eigen::Index argmax = 0;
    logits.col(i).maxCoeff(&argmax);
    if (argmax == shifted[static_cast<std::size_t>(i)]) ++correct;
  }
  EvalResult r;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  r.mean_loss = softmax_xent(logits, shifted);
  return r;
}

double gradient_check(const Mlp& net, const Batch& batch, double eps, int checks_per_layer,
                      std::mt19937_64* rng) {
  if (checks_per_layer > 0 && rng == nullptr)
    throw ConfigurationError("gradient_check: sampled mode requires an rng");
  Gradients analytic;
  net.backward(batch, analytic);

  Mlp probe = net;
  double max_rel = 0.0;
  auto loss_at = [&]() {
    return softmax_xent(probe.forward(batch.images), batch.labels);
  };
  auto check_param = [&](double& p, double g) {
    const double saved = p;
    p = saved + eps;
    const double lp = loss_at();
    p = saved - eps;
    const double lm = loss_at();
    p = saved;
    const double fd = (lp - lm) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(g), 1e-8});
    max_rel = std::max(max_rel, std::abs(fd - g) / denom);
  };
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto ul = static_cast<std::size_t>(l);
    Mat& w = probe.weights()[ul];
    Vec& b = probe.biases()[ul];
    if (checks_per_layer == 0) {
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) check_param(w(i, j), analytic.w[ul](i, j));
      for (Eigen::Index i = 0; i < b.size(); ++i) check_param(b(i), analytic.b[ul](i));
    } else {
      std::uniform_int_distribution<Eigen::Index> wi(0, w.size() - 1);
      for (int k = 0; k < checks_per_layer; ++k) {
        const Eigen::Index flat = wi(*rng);
        check_param(w.data()[flat], analytic.w[ul].data()[flat]);
      }
      std::uniform_int_distribution<Eigen::Index> bi(0, b.size() - 1);
      const int bias_checks = std::min<int>(checks_per_layer, static_cast<int>(b.size()));
      for (int k = 0; k < bias_checks; ++k) {
        const Eigen::Index flat = bi(*rng);
        check_param(b(flat), analytic.b[ul](flat));
      }
    }
  }
  return max_rel;
}

}  // namespace homeostat
