#pragma once

// Soft actor-critic: tanh-squashed Gaussian policy, twin Q critics with
// Polyak-averaged targets, automatic entropy temperature.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "salamander/common.hpp"
#include "salamander/config.hpp"
#include "salamander/nn.hpp"

namespace salamander {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;

// Shannon entropy -sum p log p of a discrete distribution (natural log).
inline double discrete_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

struct SacConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double lr = 3e-4;
  int batch_size = 256;
  std::size_t buffer_capacity = 1'000'000;
  int hidden = 64;
  long warmup = 1000;        // transitions stored before the first update
  long random_steps = 1000;  // uniform-random actions at the start of training
  double updates_per_step = 1.0;
  bool auto_alpha = true;
  double init_alpha = 1.0;
  double target_entropy = std::numeric_limits<double>::quiet_NaN();  // NaN -> -action_dim
  double reward_scale = 1.0;
  long eval_interval = 1000;
  long train_horizon = 0;  // 0 -> environment horizon
  // Goal-reached transitions bootstrap like truncations, so a positive
  // healthy reward does not make the goal look like a loss.
  bool bootstrap_goal = false;

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0) && gamma != 0.0) throw ConfigError("sac.gamma must lie in [0, 1)");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("sac.tau must lie in (0, 1]");
    if (!(lr > 0.0)) throw ConfigError("sac.lr must be positive");
    if (batch_size < 1) throw ConfigError("sac.batch_size must be positive");
    if (buffer_capacity < 1) throw ConfigError("sac.buffer_capacity must be positive");
    if (hidden < 1) throw ConfigError("sac.hidden must be positive");
    if (!(init_alpha > 0.0)) throw ConfigError("sac.init_alpha must be positive");
    if (!(updates_per_step >= 0.0)) throw ConfigError("sac.updates_per_step must be non-negative");
    if (eval_interval < 1) throw ConfigError("sac.eval_interval must be positive");
  }
};

inline SacConfig sac_config_from(const Config& c) {
  SacConfig s;
  s.gamma = c.get_double("sac.gamma", s.gamma);
  s.tau = c.get_double("sac.tau", s.tau);
  s.lr = c.get_double("sac.lr", s.lr);
  s.batch_size = static_cast<int>(c.get_int("sac.batch_size", s.batch_size));
  s.buffer_capacity = static_cast<std::size_t>(c.get_int("sac.buffer_capacity", static_cast<long>(s.buffer_capacity)));
  s.hidden = static_cast<int>(c.get_int("sac.hidden", s.hidden));
  s.warmup = c.get_int("sac.warmup", s.warmup);
  s.random_steps = c.get_int("sac.random_steps", s.random_steps);
  s.updates_per_step = c.get_double("sac.updates_per_step", s.updates_per_step);
  s.auto_alpha = c.get_bool("sac.auto_alpha", s.auto_alpha);
  s.init_alpha = c.get_double("sac.init_alpha", s.init_alpha);
  s.target_entropy = c.get_double("sac.target_entropy", s.target_entropy);
  s.reward_scale = c.get_double("sac.reward_scale", s.reward_scale);
  s.eval_interval = c.get_int("sac.eval_interval", s.eval_interval);
  s.train_horizon = c.get_int("sac.train_horizon", s.train_horizon);
  s.bootstrap_goal = c.get_bool("sac.bootstrap_goal", s.bootstrap_goal);
  s.validate();
  return s;
}
// log N(mean + exp(log_std) * noise; mean, diag exp(2 log_std)) before any
// squashing, summed over dimensions.
inline double gaussian_log_density(std::span<const double> noise, std::span<const double> log_std) {
  if (noise.size() != log_std.size()) throw std::invalid_argument("noise and log_std differ in length");
  const double half_log_2pi = 0.5 * std::log(kTwoPi);
  double lp = 0.0;
  for (std::size_t i = 0; i < noise.size(); ++i) lp += -0.5 * noise[i] * noise[i] - log_std[i] - half_log_2pi;
  return lp;
}

struct Transition {
  std::vector<double> obs;
  std::vector<double> action;  // normalised, in [-1, 1]
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;  // terminal, not time-limit truncation
};

struct Batch {
  Matrix obs;       // obs_dim x B
  Matrix action;    // act_dim x B
  Vector reward;    // B
  Matrix next_obs;  // obs_dim x B
  Vector done;      // B, 1.0 for terminal

  Eigen::Index size() const { return obs.cols(); }
};

// Ring buffer. Appends are mutex-guarded so rollout workers can share one.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
      : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
    if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  void add(Transition t) {
    if (t.obs.size() != static_cast<std::size_t>(obs_dim_) || t.next_obs.size() != static_cast<std::size_t>(obs_dim_) ||
        t.action.size() != static_cast<std::size_t>(act_dim_)) {
      throw std::invalid_argument("transition dimensions do not match the replay buffer");
    }
    std::lock_guard lock(mutex_);
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return data_.size();
  }
  std::size_t capacity() const { return capacity_; }

  std::vector<std::size_t> sample_indices(int batch, std::mt19937_64& rng) const {
    std::lock_guard lock(mutex_);
    if (data_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
    for (auto& i : idx) i = pick(rng);
    return idx;
  }

  Batch sample(int batch, std::mt19937_64& rng) const {
    const auto idx = sample_indices(batch, rng);
    std::lock_guard lock(mutex_);
    Batch b{Matrix(obs_dim_, batch), Matrix(act_dim_, batch), Vector(batch), Matrix(obs_dim_, batch), Vector(batch)};
    for (int c = 0; c < batch; ++c) {
      const Transition& t = data_[idx[c]];
      b.obs.col(c) = Eigen::Map<const Vector>(t.obs.data(), obs_dim_);
      b.action.col(c) = Eigen::Map<const Vector>(t.action.data(), act_dim_);
      b.reward[c] = t.reward;
      b.next_obs.col(c) = Eigen::Map<const Vector>(t.next_obs.data(), obs_dim_);
      b.done[c] = t.done ? 1.0 : 0.0;
    }
    return b;
  }

 private:
  std::size_t capacity_;
  int obs_dim_;
  int act_dim_;
  std::vector<Transition> data_;
  std::size_t next_ = 0;
  mutable std::mutex mutex_;
};

inline Batch make_batch(const std::vector<Transition>& ts) {
  if (ts.empty()) throw std::invalid_argument("batch must be nonempty");
  const auto n = static_cast<Eigen::Index>(ts.size());
  const auto od = static_cast<Eigen::Index>(ts[0].obs.size());
  const auto ad = static_cast<Eigen::Index>(ts[0].action.size());
  Batch b{Matrix(od, n), Matrix(ad, n), Vector(n), Matrix(od, n), Vector(n)};
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& t = ts[static_cast<std::size_t>(c)];
    b.obs.col(c) = Eigen::Map<const Vector>(t.obs.data(), od);
    b.action.col(c) = Eigen::Map<const Vector>(t.action.data(), ad);
    b.reward[c] = t.reward;
    b.next_obs.col(c) = Eigen::Map<const Vector>(t.next_obs.data(), od);
    b.done[c] = t.done ? 1.0 : 0.0;
  }
  return b;
}

struct GaussianPolicyOutput {
  Matrix mean;         // act x B
  Matrix log_std;      // act x B, clipped
  Matrix pre_squash;   // u = mean + std * noise
  Matrix action;       // tanh(u) * scale
  Vector log_prob;     // B
};

// Network output rows: [mean (act), raw log-std (act)].
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, int act_dim, int hidden, std::mt19937_64& rng)
      : act_dim_(act_dim), net_({obs_dim, hidden, hidden, 2 * act_dim}, rng) {}

  int action_dim() const { return act_dim_; }
  int observation_dim() const { return net_.input_size(); }
  DenseNet& net() { return net_; }
  const DenseNet& net() const { return net_; }

  // noise: act x B standard normal draws. scale multiplies the squashed
  // action; log_prob is the density of the scaled action.
  GaussianPolicyOutput evaluate(const Matrix& obs, const Matrix& noise, ForwardTape* tape = nullptr,
                                double scale = 1.0) const {
    const Matrix out = tape ? net_.forward(obs, *tape) : net_.forward(obs);
    return from_network_output(out, noise, scale);
  }

  GaussianPolicyOutput from_network_output(const Matrix& out, const Matrix& noise, double scale = 1.0) const {
    GaussianPolicyOutput p;
    const auto B = out.cols();
    p.mean = out.topRows(act_dim_);
    p.log_std = out.bottomRows(act_dim_).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
    p.pre_squash = p.mean.array() + p.log_std.array().exp() * noise.array();
    const Matrix squashed = p.pre_squash.array().tanh();
    p.action = squashed * scale;
    p.log_prob.resize(B);
    for (Eigen::Index c = 0; c < B; ++c) {
      const Vector e = noise.col(c);
      const Vector ls = p.log_std.col(c);
      double lp = gaussian_log_density({e.data(), static_cast<std::size_t>(act_dim_)},
                                       {ls.data(), static_cast<std::size_t>(act_dim_)});
      for (int i = 0; i < act_dim_; ++i) {
        const double a = squashed(i, c);
        lp -= std::log(1.0 - a * a + kSquashEps);
      }
      p.log_prob[c] = lp - act_dim_ * std::log(scale);
    }
    return p;
  }

  Vector deterministic_action(const Vector& obs) const {
    const Vector out = net_.forward(obs);
    return out.head(act_dim_).array().tanh();
  }

 private:
  int act_dim_ = 0;
  DenseNet net_;
};

inline Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  }
  return m;
}

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
};

// a = tanh(mean + std * eps) * scale with eps ~ N(0, I).
inline ActionSample sample_action(const GaussianPolicy& policy, std::span<const double> obs, std::mt19937_64& rng,
                                  double scale = 1.0) {
  if (obs.size() != static_cast<std::size_t>(policy.observation_dim())) {
    throw std::invalid_argument("observation size does not match the policy");
  }
  const Matrix o = Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size()));
  const auto out = policy.evaluate(o, standard_normal(policy.action_dim(), 1, rng), nullptr, scale);
  return {std::vector<double>(out.action.data(), out.action.data() + out.action.size()), out.log_prob[0]};
}

struct LossReport {
  double critic1 = 0.0;
  double critic2 = 0.0;
  double actor = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;  // -mean log pi over the batch
};

class SacAgent {
 public:
  SacAgent(int obs_dim, int act_dim, SacConfig config, std::uint64_t seed)
      : config_(config), obs_dim_(obs_dim), act_dim_(act_dim), rng_(seed) {
    config_.validate();
    if (obs_dim < 1 || act_dim < 1) throw std::invalid_argument("agent dimensions must be positive");
    const int h = config_.hidden;
    policy_ = GaussianPolicy(obs_dim, act_dim, h, rng_);
    q1_ = DenseNet({obs_dim + act_dim, h, h, 1}, rng_);
    q2_ = DenseNet({obs_dim + act_dim, h, h, 1}, rng_);
    q1_target_ = q1_;
    q2_target_ = q2_;
    policy_opt_ = Adam(policy_.net(), config_.lr);
    q1_opt_ = Adam(q1_, config_.lr);
    q2_opt_ = Adam(q2_, config_.lr);
    alpha_opt_ = ScalarAdam(config_.lr);
    log_alpha_ = std::log(config_.init_alpha);
    target_entropy_ = std::isnan(config_.target_entropy) ? -static_cast<double>(act_dim) : config_.target_entropy;
  }

  int observation_dim() const { return obs_dim_; }
  int action_dim() const { return act_dim_; }
  const SacConfig& config() const { return config_; }
  double alpha() const { return std::exp(log_alpha_); }
  double target_entropy() const { return target_entropy_; }
  const GaussianPolicy& policy() const { return policy_; }
  GaussianPolicy& policy() { return policy_; }
  const DenseNet& critic1() const { return q1_; }
  const DenseNet& critic2() const { return q2_; }
  const DenseNet& target1() const { return q1_target_; }
  const DenseNet& target2() const { return q2_target_; }
  std::mt19937_64& rng() { return rng_; }

  void swap_critics() {
    std::swap(q1_, q2_);
    std::swap(q1_target_, q2_target_);
    std::swap(q1_opt_, q2_opt_);
  }

  // Normalised action in [-1, 1]^act_dim.
  std::vector<double> act(std::span<const double> obs, bool deterministic) {
    if (deterministic) {
      const Vector a = policy_.deterministic_action(Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size())));
      return {a.data(), a.data() + a.size()};
    }
    return sample_action(policy_, obs, rng_).action;
  }

  // y = scale * r + gamma (1 - done) (min target Q(s', a') - alpha log pi(a'|s'))
  Vector critic_targets(const Batch& b) {
    const auto next = policy_.evaluate(b.next_obs, standard_normal(act_dim_, b.size(), rng_));
    const Matrix in = stack(b.next_obs, next.action);
    const Matrix t1 = q1_target_.forward(in);
    const Matrix t2 = q2_target_.forward(in);
    const Vector soft = t1.row(0).cwiseMin(t2.row(0)).transpose() - alpha() * next.log_prob;
    return config_.reward_scale * b.reward +
           config_.gamma * (Vector::Ones(b.size()) - b.done).cwiseProduct(soft);
  }

  // Mean over the batch of alpha log pi(a|s) - min(Q1, Q2)(s, a) with
  // a reparameterised from the given noise.
  double actor_objective(const Matrix& obs, const Matrix& noise) const {
    const auto p = policy_.evaluate(obs, noise);
    const Matrix in = stack(obs, p.action);
    const Matrix v1 = q1_.forward(in);
    const Matrix v2 = q2_.forward(in);
    const Vector qmin = v1.row(0).cwiseMin(v2.row(0)).transpose();
    return (alpha() * p.log_prob - qmin).mean();
  }

  struct ActorGradient {
    double loss = 0.0;
    double mean_log_prob = 0.0;
    NetGradients grads;  // of the policy network
  };

  // Gradient of actor_objective with respect to the policy parameters,
  // reparameterised through the tanh squash.
  ActorGradient actor_gradient(const Matrix& obs, const Matrix& noise) const {
    const auto B = obs.cols();
    const double inv_b = 1.0 / static_cast<double>(B);
    ForwardTape ptape;
    const auto p = policy_.evaluate(obs, noise, &ptape);
    const Matrix in = stack(obs, p.action);
    ForwardTape t1, t2;
    const Matrix v1 = q1_.forward(in, t1);
    const Matrix v2 = q2_.forward(in, t2);
    Matrix g1 = Matrix::Zero(1, B);
    Matrix g2 = Matrix::Zero(1, B);
    Vector qmin(B);
    for (Eigen::Index c = 0; c < B; ++c) {
      if (v1(0, c) <= v2(0, c)) {
        qmin[c] = v1(0, c);
        g1(0, c) = -inv_b;
      } else {
        qmin[c] = v2(0, c);
        g2(0, c) = -inv_b;
      }
    }
    Matrix din1, din2;
    q1_.backward(t1, g1, &din1);
    q2_.backward(t2, g2, &din2);
    const Matrix dl_da = (din1 + din2).bottomRows(act_dim_);

    const double alpha_now = alpha();
    const Matrix& raw = ptape.activations.back();
    Matrix grad_out(2 * act_dim_, B);
    for (Eigen::Index c = 0; c < B; ++c) {
      for (int i = 0; i < act_dim_; ++i) {
        const double a = p.action(i, c);
        const double one_minus = 1.0 - a * a;
        // d/du of -log(1 - tanh(u)^2 + eps)
        const double dlogp_du = 2.0 * a * one_minus / (one_minus + kSquashEps);
        const double dl_du = alpha_now * inv_b * dlogp_du + dl_da(i, c) * one_minus;
        const double sigma_eps = std::exp(p.log_std(i, c)) * noise(i, c);
        const double raw_ls = raw(act_dim_ + i, c);
        const bool inside = raw_ls >= kLogStdMin && raw_ls <= kLogStdMax;
        grad_out(i, c) = dl_du;
        grad_out(act_dim_ + i, c) = inside ? dl_du * sigma_eps - alpha_now * inv_b : 0.0;
      }
    }
    return {(alpha_now * p.log_prob - qmin).mean(), p.log_prob.mean(), policy_.net().backward(ptape, grad_out)};
  }

  LossReport update(const Batch& b) {
    if (b.size() == 0) throw std::invalid_argument("SAC update needs a nonempty batch");
    const auto B = b.size();
    LossReport report;

    // Critics.
    const Vector y = critic_targets(b);
    const Matrix sa = stack(b.obs, b.action);
    report.critic1 = regress_critic(q1_, q1_opt_, sa, y);
    report.critic2 = regress_critic(q2_, q2_opt_, sa, y);

    // Actor.
    const ActorGradient actor = actor_gradient(b.obs, standard_normal(act_dim_, B, rng_));
    policy_opt_.step(policy_.net(), actor.grads);
    report.actor = actor.loss;

    // Temperature.
    const double mean_logp = actor.mean_log_prob;
    report.entropy = -mean_logp;
    report.alpha_loss = -log_alpha_ * (mean_logp + target_entropy_);
    if (config_.auto_alpha) alpha_opt_.step(log_alpha_, -(mean_logp + target_entropy_));
    report.alpha = alpha();

    q1_target_.polyak_from(q1_, config_.tau);
    q2_target_.polyak_from(q2_, config_.tau);
    return report;
  }

  void save(std::ostream& out, const std::string& config_hash) const {
    out << "salamander-sac-checkpoint 1\n";
    out << "config_hash " << config_hash << "\n";
    out << "dims " << obs_dim_ << ' ' << act_dim_ << ' ' << config_.hidden << "\n";
    out << "log_alpha " << Config::format_double(log_alpha_) << "\n";
    write_net(out, "policy", policy_.net());
    write_net(out, "q1", q1_);
    write_net(out, "q2", q2_);
    write_net(out, "q1_target", q1_target_);
    write_net(out, "q2_target", q2_target_);
  }

  // Returns the stored config hash.
  std::string load(std::istream& in) {
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "salamander-sac-checkpoint" || version != 1) {
      throw std::runtime_error("not a salamander SAC checkpoint (version 1)");
    }
    std::string hash;
    expect(in, "config_hash");
    in >> hash;
    expect(in, "dims");
    int od = 0, ad = 0, h = 0;
    in >> od >> ad >> h;
    if (od != obs_dim_ || ad != act_dim_ || h != config_.hidden) {
      throw std::runtime_error("checkpoint dimensions do not match this agent");
    }
    expect(in, "log_alpha");
    in >> log_alpha_;
    read_net(in, "policy", policy_.net());
    read_net(in, "q1", q1_);
    read_net(in, "q2", q2_);
    read_net(in, "q1_target", q1_target_);
    read_net(in, "q2_target", q2_target_);
    if (!in) throw std::runtime_error("truncated checkpoint");
    return hash;
  }

 private:
  static Matrix stack(const Matrix& top, const Matrix& bottom) {
    Matrix m(top.rows() + bottom.rows(), top.cols());
    m << top, bottom;
    return m;
  }

  static double regress_critic(DenseNet& q, Adam& opt, const Matrix& sa, const Vector& y) {
    ForwardTape tape;
    const Matrix v = q.forward(sa, tape);
    const Eigen::RowVectorXd err = v.row(0) - y.transpose();
    const double inv_b = 1.0 / static_cast<double>(sa.cols());
    const Matrix grad = 2.0 * inv_b * err;
    opt.step(q, q.backward(tape, grad));
    return err.squaredNorm() * inv_b;
  }

  static void expect(std::istream& in, const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) throw std::runtime_error("checkpoint: expected '" + word + "'");
  }

  static void write_net(std::ostream& out, const std::string& name, const DenseNet& net) {
    const auto p = net.flat_parameters();
    out << "net " << name << ' ' << p.size() << "\n";
    for (std::size_t i = 0; i < p.size(); ++i) out << Config::format_double(p[i]) << (i + 1 == p.size() ? '\n' : ' ');
  }

  static void read_net(std::istream& in, const std::string& name, DenseNet& net) {
    expect(in, "net");
    expect(in, name);
    std::size_t n = 0;
    in >> n;
    if (n != net.parameter_count()) throw std::runtime_error("checkpoint: parameter count mismatch for " + name);
    std::vector<double> p(n);
    for (auto& v : p) in >> v;
    net.set_flat_parameters(p);
  }

  SacConfig config_;
  int obs_dim_;
  int act_dim_;
  std::mt19937_64 rng_;
  GaussianPolicy policy_;
  DenseNet q1_, q2_, q1_target_, q2_target_;
  Adam policy_opt_, q1_opt_, q2_opt_;
  ScalarAdam alpha_opt_;
  double log_alpha_ = 0.0;
  double target_entropy_ = 0.0;
};

// One gradient step on a uniformly sampled minibatch.
inline LossReport sac_update(SacAgent& agent, const ReplayBuffer& buffer) {
  const auto minimum = static_cast<std::size_t>(std::max<long>(agent.config().warmup, 1));
  if (buffer.size() < minimum) throw std::logic_error("replay buffer has not reached its warmup size");
  return agent.update(buffer.sample(agent.config().batch_size, agent.rng()));
}

}  // namespace salamander
