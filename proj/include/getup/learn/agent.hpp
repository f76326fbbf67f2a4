#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <vector>

#include "getup/core/error.hpp"
#include "getup/env/types.hpp"
#include "getup/learn/config.hpp"
#include "getup/learn/nn.hpp"

namespace getup {

// Running mean/variance of observations (Welford).
class ObsNormalizer {
 public:
  explicit ObsNormalizer(bool enabled = true) : enabled_(enabled) {
    mean_.fill(0.0);
    m2_.fill(0.0);
  }
  void update(const ObservationVector& o);
  // Identity until enabled and fed at least two observations.
  template <class In, class S>
  void apply(const In* o, S* out) const {
    for (int i = 0; i < kObsDim; ++i) {
      double v = o[i];
      if (enabled_ && count_ > 1) {
        v = std::clamp((v - mean_[i]) / std::sqrt(m2_[i] / count_ + 1e-8), -10.0, 10.0);
      }
      out[i] = static_cast<S>(v);
    }
  }
  bool enabled() const { return enabled_; }
  double count() const { return count_; }
  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  bool enabled_;
  double count_ = 0.0;
  ObservationVector mean_, m2_;
};

template <class S>
struct Batch {
  nn::Mat<S> obs;       // 27 x B, normalized
  nn::Mat<S> act;       // 5 x B
  nn::Mat<S> next_obs;  // 27 x B, normalized
  nn::Col<S> reward;
  nn::Col<S> terminal;  // 1 on true termination, 0 on timeout or non-final
  Eigen::Index size() const { return obs.cols(); }
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double temperature = 0.0;
  double entropy = 0.0;
  bool actor_updated = false;
};

// Squashed-Gaussian actor and twin critics. CrossQ mode: critics carry
// batch renormalization and no targets; SAC mode: plain critics with one
// Polyak-averaged target copy each.
template <class S>
class Agent {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  TrainConfig config;
  double a_max;
  nn::Mlp<S> actor;
  std::array<nn::Mlp<S>, 2> critics;
  std::vector<nn::Mlp<S>> targets;
  nn::Param<S> log_alpha;
  nn::Adam<S> actor_opt, critic_opt, alpha_opt;
  ObsNormalizer normalizer;
  std::int64_t updates = 0;

  Agent(const TrainConfig& cfg, double a_max_, Rng& rng)
      : config(cfg), a_max(a_max_), normalizer(cfg.normalize_observations) {
    nn::MlpSpec as{kObsDim, cfg.widths, 2 * kActDim, false, cfg.renorm};
    actor = nn::Mlp<S>(as, rng);
    nn::MlpSpec cs{kObsDim + kActDim, cfg.effective_critic_widths(), 1, cfg.algorithm == Algorithm::crossq,
                   cfg.renorm};
    for (auto& c : critics) c = nn::Mlp<S>(cs, rng);
    if (cfg.algorithm == Algorithm::sac) {
      targets.assign(critics.begin(), critics.end());
    }
    log_alpha.resize(1, 1);
    log_alpha.value(0, 0) = static_cast<S>(std::log(cfg.init_temperature));
    const double b1 = cfg.effective_beta1();
    actor_opt = nn::Adam<S>(actor.params(), cfg.learning_rate, b1, cfg.adam_beta2);
    critic_opt = nn::Adam<S>(critic_params(), cfg.learning_rate, b1, cfg.adam_beta2);
    alpha_opt = nn::Adam<S>({&log_alpha}, cfg.learning_rate, b1, cfg.adam_beta2);
  }

  S alpha() const { return std::exp(log_alpha.value(0, 0)); }

  std::vector<nn::Param<S>*> critic_params() {
    auto p = critics[0].params();
    auto q = critics[1].params();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }
  std::int64_t critic_parameter_count() { return critics[0].parameter_count() + critics[1].parameter_count(); }
  std::int64_t target_parameter_count() {
    std::int64_t n = 0;
    for (auto& t : targets) n += t.parameter_count();
    return n;
  }

  // ---- policy

  struct PolicyPass {
    nn::Mat<S> raw, mu, log_std, std, u, t, action;
    nn::Col<S> log_prob;  // per sample
  };

  // noise == nullptr gives the deterministic mean action.
  PolicyPass policy(const nn::Mat<S>& obs, const nn::Mat<S>* noise) {
    PolicyPass p;
    p.raw = actor.forward(obs, nn::Mode::eval);
    const Eigen::Index B = obs.cols();
    p.mu = p.raw.topRows(kActDim);
    const S half = static_cast<S>(0.5 * (kLogStdMax - kLogStdMin));
    p.log_std = ((p.raw.bottomRows(kActDim).array().tanh() + 1) * half + static_cast<S>(kLogStdMin)).matrix();
    p.std = p.log_std.array().exp().matrix();
    p.u = noise ? (p.mu.array() + p.std.array() * noise->array()).matrix() : p.mu;
    p.t = p.u.array().tanh().matrix();
    p.action = p.t * static_cast<S>(a_max);
    p.log_prob.setZero(B);
    if (noise) {
      // Density of the normalized action tanh(u) in [-1, 1]; the a_max
      // scale is left out so entropy targets do not depend on units.
      const S c = static_cast<S>(0.5 * std::log(2.0 * std::numbers::pi));
      for (Eigen::Index b = 0; b < B; ++b) {
        S lp = 0;
        for (int k = 0; k < kActDim; ++k) {
          const S e = (*noise)(k, b);
          const S u = p.u(k, b);
          // log(1 - tanh(u)^2) in a form that stays finite for large |u|
          const S log_dtanh = 2 * (static_cast<S>(std::log(2.0)) - u - softplus(-2 * u));
          lp += -S(0.5) * e * e - p.log_std(k, b) - c - log_dtanh;
        }
        p.log_prob(b) = lp;
      }
    }
    return p;
  }

  nn::Mat<S> sample_noise(Eigen::Index B, Rng& rng) const {
    nn::Mat<S> n(kActDim, B);
    for (Eigen::Index i = 0; i < n.size(); ++i) n.data()[i] = static_cast<S>(standard_normal(rng));
    return n;
  }

  // ---- losses

  // TD targets for a batch: r + gamma * (1 - terminal) * (min Q' - alpha log pi').
  nn::Col<S> td_target(const Batch<S>& b, const nn::Col<S>& q_next_min, const nn::Col<S>& next_log_prob) const {
    const S g = static_cast<S>(config.gamma);
    return (b.reward.array() +
            g * (1 - b.terminal.array()) * (q_next_min.array() - alpha() * next_log_prob.array()))
        .matrix();
  }

  // Sum over both critics of the mean squared TD error. Gradients are left
  // in the critic parameters when `grads` is set.
  // `frozen_target` replaces the bootstrapped target; the gradient never
  // flows through the target either way.
  double critic_loss(const Batch<S>& b, const nn::Mat<S>& next_noise, nn::Mode mode, bool grads,
                     const nn::Col<S>* frozen_target = nullptr) {
    const Eigen::Index B = b.size();
    const PolicyPass next = policy(b.next_obs, &next_noise);
    nn::Mat<S> sa(kObsDim + kActDim, B), nsa(kObsDim + kActDim, B);
    sa << b.obs, b.act;
    nsa << b.next_obs, next.action;

    std::array<nn::Mat<S>, 2> q_pred, q_next;
    if (config.algorithm == Algorithm::crossq) {
      // One joint pass so the normalization statistics cover both halves.
      nn::Mat<S> joint(kObsDim + kActDim, 2 * B);
      joint << sa, nsa;
      for (int i = 0; i < 2; ++i) {
        const nn::Mat<S> q = critics[i].forward(joint, mode);
        q_pred[i] = q.leftCols(B);
        q_next[i] = q.rightCols(B);
      }
    } else {
      for (int i = 0; i < 2; ++i) {
        q_pred[i] = critics[i].forward(sa, mode);
        q_next[i] = targets[i].forward(nsa, nn::Mode::eval);
      }
    }
    const nn::Col<S> q_min = q_next[0].cwiseMin(q_next[1]).transpose();
    const nn::Col<S> y = frozen_target ? *frozen_target : td_target(b, q_min, next.log_prob);
    last_target_ = y;
    last_q_mean_ = static_cast<double>(q_pred[0].mean());

    double loss = 0.0;
    if (grads) {
      for (auto& c : critics) c.zero_grad();
    }
    for (int i = 0; i < 2; ++i) {
      const nn::Mat<S> err = q_pred[i] - y.transpose();
      loss += static_cast<double>(err.squaredNorm()) / static_cast<double>(B);
      if (grads) {
        nn::Mat<S> dq = nn::Mat<S>::Zero(1, q_pred[i].cols() + (config.algorithm == Algorithm::crossq ? B : 0));
        dq.leftCols(B) = err * static_cast<S>(2.0 / static_cast<double>(B));
        critics[i].backward(dq, true);
      }
    }
    return loss;
  }

  // mean(alpha * log pi(a|s) - min_i Q_i(s, a)) with a = tanh(mu + std * noise) * a_max.
  // Critics are evaluated with running statistics and receive no gradient.
  double actor_loss(const nn::Mat<S>& obs, const nn::Mat<S>& noise, bool grads, double* mean_log_prob = nullptr) {
    const Eigen::Index B = obs.cols();
    const PolicyPass p = policy(obs, &noise);
    nn::Mat<S> sa(kObsDim + kActDim, B);
    sa << obs, p.action;
    const nn::Mat<S> q1 = critics[0].forward(sa, nn::Mode::eval);
    const nn::Mat<S> q2 = critics[1].forward(sa, nn::Mode::eval);
    const S a = alpha();
    const S inv_b = static_cast<S>(1.0 / static_cast<double>(B));
    double loss = 0.0;
    for (Eigen::Index b = 0; b < B; ++b) loss += static_cast<double>(a * p.log_prob(b) - std::min(q1(0, b), q2(0, b)));
    loss /= static_cast<double>(B);
    if (mean_log_prob) *mean_log_prob = static_cast<double>(p.log_prob.mean());
    if (!grads) return loss;

    nn::Mat<S> d1 = nn::Mat<S>::Zero(1, B), d2 = nn::Mat<S>::Zero(1, B);
    for (Eigen::Index b = 0; b < B; ++b) (q1(0, b) <= q2(0, b) ? d1 : d2)(0, b) = -inv_b;
    nn::Mat<S> dsa = critics[0].backward(d1, false) + critics[1].backward(d2, false);
    const nn::Mat<S> da = dsa.bottomRows(kActDim);

    const S half = static_cast<S>(0.5 * (kLogStdMax - kLogStdMin));
    nn::Mat<S> draw(2 * kActDim, B);
    for (Eigen::Index b = 0; b < B; ++b) {
      for (int k = 0; k < kActDim; ++k) {
        const S t = p.t(k, b);
        // d/du of alpha*log pi is alpha * 2 tanh(u); of -Q via a = a_max tanh(u).
        const S du = inv_b * a * 2 * t + da(k, b) * static_cast<S>(a_max) * (1 - t * t);
        const S dlog_std = du * p.std(k, b) * noise(k, b) - inv_b * a;
        const S th = std::tanh(p.raw(kActDim + k, b));
        draw(k, b) = du;
        draw(kActDim + k, b) = dlog_std * half * (1 - th * th);
      }
    }
    actor.zero_grad();
    actor.backward(draw, true);
    return loss;
  }

  // ---- update

  UpdateStats update(const Batch<S>& b, Rng& rng) {
    UpdateStats st;
    const nn::Mat<S> next_noise = sample_noise(b.size(), rng);
    st.critic_loss = critic_loss(b, next_noise, nn::Mode::train, true);
    if (!std::isfinite(st.critic_loss)) throw TrainingDiverged("critic loss is not finite");
    critic_opt.step(critic_params());

    if (updates % config.effective_policy_delay() == 0) {
      const nn::Mat<S> noise = sample_noise(b.size(), rng);
      double mean_lp = 0.0;
      st.actor_loss = actor_loss(b.obs, noise, true, &mean_lp);
      if (!std::isfinite(st.actor_loss)) throw TrainingDiverged("actor loss is not finite");
      actor_opt.step(actor.params());
      log_alpha.grad(0, 0) = static_cast<S>(-(mean_lp + config.target_entropy));
      alpha_opt.step({&log_alpha});
      st.entropy = -mean_lp;
      st.actor_updated = true;
    }
    if (config.algorithm == Algorithm::sac) {
      const S tau = static_cast<S>(config.tau);
      for (int i = 0; i < 2; ++i) {
        auto src = critics[i].params();
        auto dst = targets[i].params();
        for (std::size_t k = 0; k < src.size(); ++k) dst[k]->value = (1 - tau) * dst[k]->value + tau * src[k]->value;
      }
    }
    st.temperature = static_cast<double>(alpha());
    ++updates;
    return st;
  }

  const nn::Col<S>& last_target() const { return last_target_; }
  double last_q_mean() const { return last_q_mean_; }

 private:
  static S softplus(S x) { return x > 20 ? x : std::log1p(std::exp(x)); }
  double last_q_mean_ = 0.0;
  nn::Col<S> last_target_;
};

}  // namespace getup
