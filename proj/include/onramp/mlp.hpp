#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Core>

namespace onramp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class OutputActivation { kLinear, kTanh };

/// Fully connected network with two rectifier hidden layers. All weights and
/// biases live in one flat vector (W1, b1, W2, b2, W3, b3; matrices
/// column-major) so optimizers, target blending and checkpoints treat the
/// parameters as a single array. Batches are column-per-sample.
class Mlp {
 public:
  struct Cache {
    Matrix x, z1, h1, z2, h2, z3, y;
  };

  Mlp() = default;
  Mlp(int inputs, int hidden, int outputs, OutputActivation activation)
      : in_(inputs), hidden_(hidden), out_(outputs), activation_(activation),
        params_(Vector::Zero(parameter_count(inputs, hidden, outputs))) {}

  static std::int64_t parameter_count(int in, int hidden, int out) {
    return std::int64_t{hidden} * in + hidden + std::int64_t{hidden} * hidden + hidden +
           std::int64_t{out} * hidden + out;
  }

  int inputs() const { return in_; }
  int hidden() const { return hidden_; }
  int outputs() const { return out_; }
  OutputActivation activation() const { return activation_; }
  std::int64_t size() const { return params_.size(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer, biases
  /// included. A positive `output_bound` replaces the bound of the output
  /// layer.
  void init_uniform(std::mt19937_64& rng, double output_bound = 0.0) {
    auto fill = [&](std::int64_t offset, std::int64_t count, int fan_in, double bound_override = 0.0) {
      const double bound = bound_override > 0.0 ? bound_override : 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (std::int64_t i = 0; i < count; ++i) params_[offset + i] = dist(rng);
    };
    fill(off_w1(), off_w2() - off_w1(), in_);
    fill(off_w2(), off_w3() - off_w2(), hidden_);
    fill(off_w3(), params_.size() - off_w3(), hidden_, output_bound);
  }

  void forward(const Matrix& x, Cache& c) const {
    if (x.rows() != in_) throw std::invalid_argument("Mlp::forward: input dimension mismatch");
    c.x = x;
    c.z1.noalias() = w1() * x;
    c.z1.colwise() += b1();
    c.h1 = c.z1.cwiseMax(0.0);
    c.z2.noalias() = w2() * c.h1;
    c.z2.colwise() += b2();
    c.h2 = c.z2.cwiseMax(0.0);
    c.z3.noalias() = w3() * c.h2;
    c.z3.colwise() += b3();
    c.y = activation_ == OutputActivation::kTanh ? Matrix(c.z3.array().tanh().matrix()) : c.z3;
  }

  Matrix forward(const Matrix& x) const {
    Cache c;
    forward(x, c);
    return c.y;
  }

  /// Backpropagates dL/dy. Adds the parameter gradient into `grad` (when
  /// given) and writes dL/dx into `grad_x` (when given). `grad_z3`, when
  /// given, is an extra gradient on the output pre-activation.
  void backward(const Cache& c, const Matrix& grad_y, Vector* grad, Matrix* grad_x,
                const Matrix* grad_z3 = nullptr) const {
    Matrix g = grad_y;
    if (activation_ == OutputActivation::kTanh) {
      g.array() *= (1.0 - c.y.array().square());
    }
    if (grad_z3) g += *grad_z3;
    if (grad) {
      if (grad->size() != params_.size()) grad->setZero(params_.size());
      map(*grad, off_w3(), out_, hidden_).noalias() += g * c.h2.transpose();
      map(*grad, off_b3(), out_, 1) += g.rowwise().sum();
    }
    Matrix d2 = w3().transpose() * g;
    d2.array() *= (c.z2.array() > 0.0).cast<double>();
    if (grad) {
      map(*grad, off_w2(), hidden_, hidden_).noalias() += d2 * c.h1.transpose();
      map(*grad, off_b2(), hidden_, 1) += d2.rowwise().sum();
    }
    Matrix d1 = w2().transpose() * d2;
    d1.array() *= (c.z1.array() > 0.0).cast<double>();
    if (grad) {
      map(*grad, off_w1(), hidden_, in_).noalias() += d1 * c.x.transpose();
      map(*grad, off_b1(), hidden_, 1) += d1.rowwise().sum();
    }
    if (grad_x) grad_x->noalias() = w1().transpose() * d1;
  }

  Eigen::Map<const Matrix> w1() const { return cmap(off_w1(), hidden_, in_); }
  Eigen::Map<const Vector> b1() const { return vmap(off_b1(), hidden_); }
  Eigen::Map<const Matrix> w2() const { return cmap(off_w2(), hidden_, hidden_); }
  Eigen::Map<const Vector> b2() const { return vmap(off_b2(), hidden_); }
  Eigen::Map<const Matrix> w3() const { return cmap(off_w3(), out_, hidden_); }
  Eigen::Map<const Vector> b3() const { return vmap(off_b3(), out_); }

  Eigen::Map<Matrix> w3_mut() { return map(params_, off_w3(), out_, hidden_); }
  Eigen::Map<Matrix> b3_mut() { return map(params_, off_b3(), out_, 1); }

  bool same_shape(const Mlp& other) const {
    return in_ == other.in_ && hidden_ == other.hidden_ && out_ == other.out_ && activation_ == other.activation_;
  }

 private:
  std::int64_t off_w1() const { return 0; }
  std::int64_t off_b1() const { return std::int64_t{hidden_} * in_; }
  std::int64_t off_w2() const { return off_b1() + hidden_; }
  std::int64_t off_b2() const { return off_w2() + std::int64_t{hidden_} * hidden_; }
  std::int64_t off_w3() const { return off_b2() + hidden_; }
  std::int64_t off_b3() const { return off_w3() + std::int64_t{out_} * hidden_; }

  Eigen::Map<const Matrix> cmap(std::int64_t off, int rows, int cols) const {
    return Eigen::Map<const Matrix>(params_.data() + off, rows, cols);
  }
  Eigen::Map<const Vector> vmap(std::int64_t off, int rows) const {
    return Eigen::Map<const Vector>(params_.data() + off, rows);
  }
  static Eigen::Map<Matrix> map(Vector& v, std::int64_t off, int rows, int cols) {
    return Eigen::Map<Matrix>(v.data() + off, rows, cols);
  }

  int in_ = 0;
  int hidden_ = 0;
  int out_ = 0;
  OutputActivation activation_ = OutputActivation::kLinear;
  Vector params_;
};

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t t = 0;

  explicit AdamState(std::int64_t n = 0) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam descent step on `params`.
inline void adam_step(Vector& params, const Vector& grad, AdamState& s, const AdamHyper& h) {
  ++s.t;
  s.m = h.beta1 * s.m + (1.0 - h.beta1) * grad;
  s.v = h.beta2 * s.v + (1.0 - h.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(s.t));
  params.array() -= h.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + h.eps);
}

}  // namespace onramp
