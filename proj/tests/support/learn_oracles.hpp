#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "getup/core/random.hpp"
#include "getup/learn/agent.hpp"

namespace getup::testing {

using D = double;
using MatD = nn::Mat<D>;

inline TrainConfig small_config(Algorithm algo, std::vector<int> widths = {8, 8}) {
  TrainConfig c;
  c.algorithm = algo;
  c.widths = widths;
  c.batch_size = 6;
  c.replay_capacity = 100;
  c.init_temperature = 0.3;
  c.renorm.warmup_steps = 1000000;
  return c;
}

inline MatD random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  MatD m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * standard_normal(rng);
  return m;
}

inline Batch<D> random_batch(Eigen::Index B, Rng& rng, double terminal_fraction = 0.3) {
  Batch<D> b;
  b.obs = random_mat(kObsDim, B, rng);
  b.next_obs = random_mat(kObsDim, B, rng);
  b.act = random_mat(kActDim, B, rng, 1.0);
  b.reward = random_mat(B, 1, rng);
  b.terminal.resize(B);
  for (Eigen::Index i = 0; i < B; ++i) b.terminal(i) = uniform01(rng) < terminal_fraction ? 1.0 : 0.0;
  return b;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

// Compares analytic gradients in `params` with central differences of
// `loss` over every entry.
template <class LossFn>
inline double max_fd_error(const std::vector<nn::Param<D>*>& params, LossFn loss, double h = 1e-6) {
  std::vector<MatD> analytic;
  for (auto* p : params) analytic.push_back(p->grad);
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Eigen::Index i = 0; i < params[k]->value.size(); ++i) {
      D& x = params[k]->value.data()[i];
      const D x0 = x;
      x = x0 + h;
      const double lp = loss();
      x = x0 - h;
      const double lm = loss();
      x = x0;
      const double fd = (lp - lm) / (2 * h);
      const double an = analytic[k].data()[i];
      if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) continue;
      worst = std::max(worst, rel_err(an, fd));
    }
  }
  return worst;
}

// The target is held fixed for the finite-difference probe: the critic
// gradient deliberately ignores its dependence on the parameters.
inline double critic_fd_error(Agent<D>& ag, const Batch<D>& b, const MatD& noise, nn::Mode mode) {
  ag.critic_loss(b, noise, mode, true);
  const nn::Col<D> y = ag.last_target();
  ag.critic_loss(b, noise, mode, true, &y);
  return max_fd_error(ag.critic_params(), [&] { return ag.critic_loss(b, noise, mode, false, &y); });
}


// TD loss of an agent whose critics and targets are single linear layers,
// written out by hand.
inline double linear_critic_loss_oracle(Agent<D>& ag, const Batch<D>& b, const MatD& noise, double alpha) {
  const auto p = ag.policy(b.next_obs, &noise);
  auto q_lin = [](nn::Mlp<D>& net, const nn::Col<D>& x) {
    auto ps = net.params();
    return (ps[0]->value * x)(0, 0) + ps[1]->value(0, 0);
  };
  double loss = 0.0;
  const Eigen::Index B = b.obs.cols();
  for (Eigen::Index i = 0; i < B; ++i) {
    nn::Col<D> nsa(kObsDim + kActDim), sa(kObsDim + kActDim);
    nsa << b.next_obs.col(i), p.action.col(i);
    sa << b.obs.col(i), b.act.col(i);
    // log density of tanh(u), written independently
    double lp = 0.0;
    for (int k = 0; k < kActDim; ++k) {
      const double mu = p.mu(k, i);
      const double sd = p.std(k, i);
      const double u = mu + sd * noise(k, i);
      const double gauss = -0.5 * std::pow((u - mu) / sd, 2) - std::log(sd) - 0.5 * std::log(2 * std::numbers::pi);
      lp += gauss - std::log(1 - std::pow(std::tanh(u), 2));
    }
    const double qn = std::min(q_lin(ag.targets[0], nsa), q_lin(ag.targets[1], nsa));
    const double y = b.reward(i) + ag.config.gamma * (1 - b.terminal(i)) * (qn - alpha * lp);
    for (int k = 0; k < 2; ++k) loss += std::pow(q_lin(ag.critics[k], sa) - y, 2) / static_cast<double>(B);
  }
  return loss;
}

}  // namespace getup::testing
