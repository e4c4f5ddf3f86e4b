#pragma once

#include <Eigen/Dense>
#include <random>
#include <stdexcept>
#include <vector>

#include "homeostat/permutation.hpp"

namespace homeostat {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Raised on structural misuse (dimension mismatch, bad shapes).
struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when training produces non-finite values; the replicate aborts.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double elu(double x);
double elu_grad(double x);

/// A batch of samples. Images are stored one per column (dim x n) so the
/// batched forward pass is a single GEMM.
struct Batch {
  Mat images;               // input_dim x n
  std::vector<int> labels;  // n entries, each in [0, num_classes)

  int size() const { return static_cast<int>(labels.size()); }
  // Checks the declared invariants; throws ConfigurationError on violation.
  void validate(int input_dim, int num_classes) const;
};

struct Gradients {
  std::vector<Mat> w;
  std::vector<Vec> b;
};

/// Fully connected net: ELU hidden layers, identity output (softmax lives in
/// the loss). Plain value type; copies are deep, so a copy is a snapshot.
class Mlp {
 public:
  Mlp() = default;
  // He-initialized weights (normal, sd = sqrt(2/fan_in)), zero biases.
  Mlp(std::vector<int> dims, std::mt19937_64& rng);

  const std::vector<int>& dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int num_layers() const { return static_cast<int>(weights_.size()); }

  const std::vector<Mat>& weights() const { return weights_; }
  const std::vector<Vec>& biases() const { return biases_; }
  std::vector<Mat>& weights() { return weights_; }
  std::vector<Vec>& biases() { return biases_; }

  /// Logits for a batch, one column per sample (output_dim x n).
  Mat forward(const Mat& images) const;

  /// Mean loss and gradients of the mean loss over the batch.
  double backward(const Batch& batch, Gradients& grads) const;

  /// p <- p - lr * g. Throws NumericError on non-finite gradients.
  void sgd_step(const Gradients& grads, double lr);
  // Same update without the per-layer finiteness scan; used on hot paths
  // where divergence is detected from the resulting loss instead.
  void sgd_step_unchecked(const Gradients& grads, double lr);

  Gradients zero_gradients() const;

  bool operator==(const Mlp& other) const;

 private:
  std::vector<int> dims_;
  std::vector<Mat> weights_;  // weights_[l]: dims_[l+1] x dims_[l]
  std::vector<Vec> biases_;
};

inline Mlp snapshot(const Mlp& net) { return net; }
inline void restore(Mlp& net, const Mlp& snap) { net = snap; }

/// Weight matrix with entries ~ N(0, 2/fan_in); rows = fan_out.
Mat he_init(int fan_in, int fan_out, std::mt19937_64& rng);

/// Mean cross-entropy of softmax(logits) vs labels; if dlogits is non-null it
/// receives the gradient of the mean loss. Max-subtraction for stability.
double softmax_xent(const Mat& logits, const std::vector<int>& labels,
                    Mat* dlogits = nullptr);

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Accuracy (argmax vs perm-relabeled ground truth) and mean loss.
EvalResult evaluate(const Mlp& net, const Batch& data, const LabelPermutation& perm);

/// Max relative error between analytic gradients and central finite
/// differences at step eps. The finite-difference side only uses forward().
/// checks_per_layer = 0 checks every parameter; otherwise that many entries
/// per weight matrix / bias vector are sampled with rng (required then).
double gradient_check(const Mlp& net, const Batch& batch, double eps = 1e-5,
                      int checks_per_layer = 0, std::mt19937_64* rng = nullptr);

}  // namespace homeostat
