#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "getup/core/random.hpp"

namespace getup::nn {

// Activations are stored feature-major: one column per sample.
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Col = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
struct Param {
  Mat<S> value;
  Mat<S> grad;
  void resize(Eigen::Index r, Eigen::Index c) {
    value.setZero(r, c);
    grad.setZero(r, c);
  }
  Eigen::Index size() const { return value.size(); }
};

enum class Mode { train, eval };

template <class S>
class Linear {
 public:
  Param<S> W, b;

  Linear() = default;
  Linear(int in, int out, Rng& rng) {
    W.resize(out, in);
    b.resize(out, 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index i = 0; i < W.value.size(); ++i) W.value.data()[i] = static_cast<S>(uniform(rng, -bound, bound));
    for (Eigen::Index i = 0; i < b.value.size(); ++i) b.value.data()[i] = static_cast<S>(uniform(rng, -bound, bound));
  }

  Mat<S> forward(const Mat<S>& x) {
    x_ = x;
    Mat<S> y = W.value * x;
    y.colwise() += b.value.col(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy, bool param_grads) {
    if (param_grads) {
      W.grad.noalias() += dy * x_.transpose();
      b.grad += dy.rowwise().sum();
    }
    return W.value.transpose() * dy;
  }

 private:
  Mat<S> x_;
};

struct RenormConfig {
  double momentum = 0.99;
  double eps = 1e-3;
  double r_max = 3.0;
  double d_max = 5.0;
  // Updates before the renormalization correction switches on; plain batch
  // norm until then.
  std::int64_t warmup_steps = 100000;
};

// Batch renormalization. In train mode it normalizes by batch statistics
// corrected towards the running ones (r, d are treated as constants in the
// backward pass); in eval mode by the running statistics alone.
template <class S>
class BatchRenorm {
 public:
  Param<S> gamma, beta;
  Col<S> running_mean, running_var;
  std::int64_t steps = 0;

  BatchRenorm() = default;
  BatchRenorm(int n, const RenormConfig& cfg) : cfg_(cfg) {
    gamma.resize(n, 1);
    gamma.value.setOnes();
    beta.resize(n, 1);
    running_mean.setZero(n);
    running_var.setOnes(n);
  }

  Mat<S> forward(const Mat<S>& x, Mode mode) {
    const S eps = static_cast<S>(cfg_.eps);
    mode_ = mode;
    if (mode == Mode::eval) {
      inv_std_ = (running_var.array() + eps).rsqrt().matrix();
      xhat_ = (x.colwise() - running_mean).array().colwise() * inv_std_.array();
    } else {
      const auto n = static_cast<S>(x.cols());
      const Col<S> mean = x.rowwise().mean();
      const Mat<S> centered = x.colwise() - mean;
      const Col<S> var = centered.array().square().rowwise().sum().matrix() / n;
      inv_std_ = (var.array() + eps).rsqrt().matrix();
      xhat0_ = centered.array().colwise() * inv_std_.array();
      const Col<S> run_std = (running_var.array() + eps).sqrt().matrix();
      r_.setOnes(x.rows());
      Col<S> d = Col<S>::Zero(x.rows());
      if (steps >= cfg_.warmup_steps) {
        const S r_max = static_cast<S>(cfg_.r_max), d_max = static_cast<S>(cfg_.d_max);
        r_ = (inv_std_.array().inverse() / run_std.array()).min(r_max).max(1 / r_max).matrix();
        d = ((mean - running_mean).array() / run_std.array()).min(d_max).max(-d_max).matrix();
      }
      xhat_ = (xhat0_.array().colwise() * r_.array()).colwise() + d.array();
      const S m = static_cast<S>(cfg_.momentum);
      const S unbias = n > 1 ? n / (n - 1) : S(1);
      running_mean = m * running_mean + (1 - m) * mean;
      running_var = m * running_var + (1 - m) * unbias * var;
      ++steps;
    }
    Mat<S> y = xhat_.array().colwise() * gamma.value.col(0).array();
    y.colwise() += beta.value.col(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy, bool param_grads) {
    if (param_grads) {
      gamma.grad += (dy.array() * xhat_.array()).rowwise().sum().matrix();
      beta.grad += dy.rowwise().sum();
    }
    Mat<S> dxhat = dy.array().colwise() * gamma.value.col(0).array();
    if (mode_ == Mode::eval) return dxhat.array().colwise() * inv_std_.array();
    const auto n = static_cast<S>(dy.cols());
    dxhat.array().colwise() *= r_.array();
    const Col<S> mean_g = dxhat.rowwise().sum() / n;
    const Col<S> mean_gx = (dxhat.array() * xhat0_.array()).rowwise().sum().matrix() / n;
    Mat<S> dx = (dxhat.colwise() - mean_g) - (xhat0_.array().colwise() * mean_gx.array()).matrix();
    return dx.array().colwise() * inv_std_.array();
  }

  const RenormConfig& config() const { return cfg_; }

 private:
  RenormConfig cfg_;
  Mode mode_ = Mode::eval;
  Col<S> inv_std_, r_;
  Mat<S> xhat0_, xhat_;
};

struct MlpSpec {
  int in = 0;
  std::vector<int> hidden;
  int out = 0;
  // Batch renormalization on the input and after every hidden linear layer.
  bool batch_norm = false;
  RenormConfig renorm;
};

// Linear -> [BatchRenorm] -> ReLU blocks followed by a linear head.
template <class S>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const MlpSpec& spec, Rng& rng) : spec_(spec) {
    int in = spec.in;
    if (spec.batch_norm) input_norm_ = BatchRenorm<S>(in, spec.renorm);
    for (int h : spec.hidden) {
      linear_.emplace_back(in, h, rng);
      if (spec.batch_norm) norms_.emplace_back(h, spec.renorm);
      in = h;
    }
    linear_.emplace_back(in, spec.out, rng);
    acts_.resize(spec.hidden.size());
  }

  Mat<S> forward(const Mat<S>& x, Mode mode = Mode::eval) {
    Mat<S> h = spec_.batch_norm ? input_norm_.forward(x, mode) : x;
    for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
      h = linear_[i].forward(h);
      if (spec_.batch_norm) h = norms_[i].forward(h, mode);
      h = h.cwiseMax(S(0));
      acts_[i] = h;
    }
    return linear_.back().forward(h);
  }

  // Gradient of the loss w.r.t. the last forward's input. Parameter
  // gradients are accumulated only when `param_grads` is set.
  Mat<S> backward(const Mat<S>& dy, bool param_grads = true) {
    Mat<S> g = linear_.back().backward(dy, param_grads);
    for (std::size_t i = spec_.hidden.size(); i-- > 0;) {
      g = (acts_[i].array() > S(0)).select(g, S(0));
      if (spec_.batch_norm) g = norms_[i].backward(g, param_grads);
      g = linear_[i].backward(g, param_grads);
    }
    if (spec_.batch_norm) g = input_norm_.backward(g, param_grads);
    return g;
  }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    if (spec_.batch_norm) {
      out.push_back(&input_norm_.gamma);
      out.push_back(&input_norm_.beta);
    }
    for (std::size_t i = 0; i < linear_.size(); ++i) {
      out.push_back(&linear_[i].W);
      out.push_back(&linear_[i].b);
      if (spec_.batch_norm && i < norms_.size()) {
        out.push_back(&norms_[i].gamma);
        out.push_back(&norms_[i].beta);
      }
    }
    return out;
  }

  std::vector<BatchRenorm<S>*> norms() {
    std::vector<BatchRenorm<S>*> out;
    if (!spec_.batch_norm) return out;
    out.push_back(&input_norm_);
    for (auto& n : norms_) out.push_back(&n);
    return out;
  }

  std::int64_t parameter_count() {
    std::int64_t n = 0;
    for (auto* p : params()) n += p->size();
    return n;
  }

  void zero_grad() {
    for (auto* p : params()) p->grad.setZero();
  }

  const MlpSpec& spec() const { return spec_; }

 private:
  MlpSpec spec_;
  BatchRenorm<S> input_norm_;
  std::vector<Linear<S>> linear_;
  std::vector<BatchRenorm<S>> norms_;
  std::vector<Mat<S>> acts_;
};

template <class S>
class Adam {
 public:
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::int64_t t = 0;
  std::vector<Mat<S>> m, v;

  Adam() = default;
  Adam(const std::vector<Param<S>*>& params, double lr_, double beta1_, double beta2_ = 0.999)
      : lr(lr_), beta1(beta1_), beta2(beta2_) {
    for (auto* p : params) {
      m.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      v.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step(const std::vector<Param<S>*>& params) {
    ++t;
    const S b1 = static_cast<S>(beta1), b2 = static_cast<S>(beta2);
    const S c1 = static_cast<S>(1.0 - std::pow(beta1, static_cast<double>(t)));
    const S c2 = static_cast<S>(1.0 - std::pow(beta2, static_cast<double>(t)));
    const S step = static_cast<S>(lr) / c1;
    const S e = static_cast<S>(eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& g = params[i]->grad;
      m[i] = b1 * m[i] + (1 - b1) * g;
      v[i] = b2 * v[i] + (1 - b2) * g.cwiseProduct(g);
      params[i]->value.array() -= step * m[i].array() / ((v[i].array() / c2).sqrt() + e);
    }
  }
};

}  // namespace getup::nn
