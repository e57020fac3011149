#ifndef CHEMPROT_NN_H_
#define CHEMPROT_NN_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chemprot {

// Row-major so that row i is the vector of sequence position i.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

using Rng = std::mt19937_64;

// A trainable tensor with its gradient accumulator and Adam moments.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  Param() = default;
  Param(std::string name, int rows, int cols);

  void ZeroGrad() { grad.setZero(); }
  // Fills value with N(0, stddev^2).
  void InitNormal(Rng &rng, double stddev);
};

void ZeroGrads(std::span<Param *const> params);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 1.0;
};

class Adam {
 public:
  explicit Adam(AdamOptions options) : options_(options) {}

  // Applies one update from the accumulated gradients, then zeroes them.
  void Step(std::span<Param *const> params);
  long steps() const { return steps_; }

 private:
  AdamOptions options_;
  long steps_ = 0;
};

// y = x W + b with W of shape in x out and b of shape 1 x out.
struct Linear {
  Param weight;
  Param bias;

  Linear() = default;
  Linear(const std::string &name, int in, int out);

  void Init(Rng &rng);
  Matrix Forward(const Matrix &x) const;
  // Accumulates parameter gradients; returns dL/dx.
  Matrix Backward(const Matrix &x, const Matrix &dy);
  void Collect(std::vector<Param *> *out) { out->push_back(&weight); out->push_back(&bias); }
};

struct LayerNormCache {
  Matrix normalized;
  Eigen::VectorXd inv_std;
};

// Per-row normalization with learned gain and bias.
struct LayerNorm {
  Param gain;
  Param bias;
  double epsilon = 1e-5;

  LayerNorm() = default;
  LayerNorm(const std::string &name, int dim);

  Matrix Forward(const Matrix &x, LayerNormCache *cache) const;
  Matrix Backward(const LayerNormCache &cache, const Matrix &dy);
  void Collect(std::vector<Param *> *out) { out->push_back(&gain); out->push_back(&bias); }
};

// Row-wise softmax, numerically stabilized.
Matrix SoftmaxRows(const Matrix &logits);
// Given y = softmax(x) row-wise and dL/dy, returns dL/dx.
Matrix SoftmaxRowsBackward(const Matrix &probs, const Matrix &dprobs);

// GELU, tanh approximation.
Matrix Gelu(const Matrix &x);
Matrix GeluBackward(const Matrix &x, const Matrix &dy);

// Summed negative log-likelihood of `targets` under the row distributions in
// `probs`. Writes (probs - onehot) * scale, the gradient with respect to the
// logits that produced `probs` under a loss scaled by `scale`.
double CrossEntropy(const Matrix &probs, std::span<const int> targets, double scale,
                    Matrix *dlogits);

// Index of the largest entry; the lowest index wins ties.
int ArgMax(const Eigen::Ref<const RowVector> &row);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  long worst_entry = -1;
  long entries_checked = 0;
};

// Compares analytic gradients against central finite differences for every
// entry of every parameter. `loss(true)` must return the loss and accumulate
// gradients into the params; `loss(false)` only returns the loss. Relative
// error is |a - n| / max(|a|, |n|, 1e-6). Requires epsilon in (0, 1e-2].
GradCheckResult GradCheck(std::span<Param *const> params,
                          const std::function<double(bool)> &loss, double epsilon);

}  // namespace chemprot

#endif  // CHEMPROT_NN_H_
