#include "chemprot/nn.h"

#include <cmath>

#include "chemprot/types.h"

namespace chemprot {

Param::Param(std::string name, int rows, int cols)
    : name(std::move(name)),
      value(Matrix::Zero(rows, cols)),
      grad(Matrix::Zero(rows, cols)),
      adam_m(Matrix::Zero(rows, cols)),
      adam_v(Matrix::Zero(rows, cols)) {}

void Param::InitNormal(Rng &rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = dist(rng);
}

void ZeroGrads(std::span<Param *const> params) {
  for (Param *p : params) p->ZeroGrad();
}

void Adam::Step(std::span<Param *const> params) {
  ++steps_;
  double scale = 1.0;
  if (options_.clip_norm > 0) {
    double sq = 0.0;
    for (const Param *p : params) sq += p->grad.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > options_.clip_norm) scale = options_.clip_norm / norm;
  }
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double step = options_.learning_rate * std::sqrt(correction2) / correction1;
  for (Param *p : params) {
    const auto g = p->grad.array() * scale;
    p->adam_m.array() = b1 * p->adam_m.array() + (1.0 - b1) * g;
    p->adam_v.array() = b2 * p->adam_v.array() + (1.0 - b2) * g.square();
    p->value.array() -= step * p->adam_m.array() / (p->adam_v.array().sqrt() + options_.epsilon);
    p->ZeroGrad();
  }
}

Linear::Linear(const std::string &name, int in, int out)
    : weight(name + ".weight", in, out), bias(name + ".bias", 1, out) {}

void Linear::Init(Rng &rng) {
  weight.InitNormal(rng, 1.0 / std::sqrt(static_cast<double>(weight.value.rows())));
  bias.value.setZero();
}

Matrix Linear::Forward(const Matrix &x) const {
  Matrix y = x * weight.value;
  y.rowwise() += bias.value.row(0);
  return y;
}

Matrix Linear::Backward(const Matrix &x, const Matrix &dy) {
  weight.grad.noalias() += x.transpose() * dy;
  bias.grad.row(0) += dy.colwise().sum();
  return dy * weight.value.transpose();
}

LayerNorm::LayerNorm(const std::string &name, int dim)
    : gain(name + ".gain", 1, dim), bias(name + ".bias", 1, dim) {
  gain.value.setOnes();
}

Matrix LayerNorm::Forward(const Matrix &x, LayerNormCache *cache) const {
  const Eigen::Index d = x.cols();
  Matrix normalized(x.rows(), d);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const RowVector centered = x.row(i).array() - mean;
    const double var = centered.squaredNorm() / static_cast<double>(d);
    inv_std(i) = 1.0 / std::sqrt(var + epsilon);
    normalized.row(i) = centered * inv_std(i);
  }
  Matrix y = normalized.array().rowwise() * gain.value.row(0).array();
  y.rowwise() += bias.value.row(0);
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix LayerNorm::Backward(const LayerNormCache &cache, const Matrix &dy) {
  const Matrix &xhat = cache.normalized;
  gain.grad.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  bias.grad.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.value.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_d = dxhat.row(i).mean();
    const double mean_dx = dxhat.row(i).dot(xhat.row(i)) / static_cast<double>(dy.cols());
    dx.row(i) = cache.inv_std(i) *
                (dxhat.row(i).array() - mean_d - xhat.row(i).array() * mean_dx).matrix();
  }
  return dx;
}

Matrix SoftmaxRows(const Matrix &logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double max = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - max).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Matrix SoftmaxRowsBackward(const Matrix &probs, const Matrix &dprobs) {
  const Eigen::VectorXd dots = (probs.array() * dprobs.array()).rowwise().sum();
  return probs.array() * (dprobs.colwise() - dots).array();
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Matrix Gelu(const Matrix &x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  });
}

Matrix GeluBackward(const Matrix &x, const Matrix &dy) {
  const Matrix deriv = x.unaryExpr([](double v) {
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
  });
  return dy.array() * deriv.array();
}

double CrossEntropy(const Matrix &probs, std::span<const int> targets, double scale,
                    Matrix *dlogits) {
  double loss = 0.0;
  if (dlogits != nullptr) *dlogits = probs * scale;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int t = targets[i];
    loss -= std::log(std::max(probs(i, t), 1e-300));
    if (dlogits != nullptr) (*dlogits)(i, t) -= scale;
  }
  return loss;
}

int ArgMax(const Eigen::Ref<const RowVector> &row) {
  int best = 0;
  for (Eigen::Index i = 1; i < row.size(); ++i) {
    if (row(i) > row(best)) best = static_cast<int>(i);
  }
  return best;
}

GradCheckResult GradCheck(std::span<Param *const> params,
                          const std::function<double(bool)> &loss, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    throw ContractViolation("gradient check epsilon must lie in (0, 1e-2]");
  }
  ZeroGrads(params);
  const double base = loss(true);
  if (!std::isfinite(base)) throw Error("gradient check: non-finite loss");
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Param *p : params) {
    if (!p->grad.allFinite()) throw Error("gradient check: non-finite gradient in " + p->name);
    analytic.push_back(p->grad);
  }
  ZeroGrads(params);

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param *p = params[k];
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double &v = p->value.data()[i];
      const double saved = v;
      v = saved + epsilon;
      const double plus = loss(false);
      v = saved - epsilon;
      const double minus = loss(false);
      v = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw Error("gradient check: non-finite loss perturbing " + p->name);
      }
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[k].data()[i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      ++result.entries_checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p->name;
        result.worst_entry = static_cast<long>(i);
      }
    }
  }
  return result;
}

}  // namespace chemprot
