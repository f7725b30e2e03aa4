#include <gtest/gtest.h>

#include <sstream>

#include "salamander/sac.hpp"

using namespace salamander;

namespace {

SacConfig small_config() {
  SacConfig c;
  c.hidden = 16;
  c.batch_size = 32;
  c.warmup = 10;
  return c;
}

Batch random_batch(int obs, int act, int n, std::uint64_t seed, double done_fraction = 0.2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Transition> ts;
  for (int i = 0; i < n; ++i) {
    Transition t;
    for (int k = 0; k < obs; ++k) t.obs.push_back(g(rng));
    for (int k = 0; k < act; ++k) t.action.push_back(u(rng));
    for (int k = 0; k < obs; ++k) t.next_obs.push_back(g(rng));
    t.reward = g(rng);
    t.done = (u(rng) + 1.0) / 2.0 < done_fraction;
    ts.push_back(std::move(t));
  }
  return make_batch(ts);
}

}  // namespace

TEST(Entropy, DiscreteUniformTwoOutcomesIsLn2) {
  const std::vector<double> p{0.5, 0.5};
  EXPECT_EQ(discrete_entropy(p), std::log(2.0));
  const std::vector<double> point{1.0, 0.0};
  EXPECT_EQ(discrete_entropy(point), 0.0);
}

TEST(Entropy, MonteCarloUnitGaussian) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  const int samples = 1'000'000;
  const std::vector<double> zero{0.0};
  double sum = 0.0;
  for (int i = 0; i < samples; ++i) {
    const std::vector<double> e{n(rng)};
    sum -= gaussian_log_density(e, zero);
  }
  EXPECT_NEAR(sum / samples, 0.5 * std::log(2 * kPi * std::exp(1.0)), 0.01);
}

TEST(Policy, SquashedLogProbIsChangeOfVariables) {
  std::mt19937_64 rng(4);
  GaussianPolicy policy(3, 2, 8, rng);
  const Matrix obs = Matrix::Random(3, 20);
  const Matrix noise = standard_normal(2, 20, rng);
  const auto out = policy.evaluate(obs, noise);
  for (int c = 0; c < 20; ++c) {
    double expect = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double sigma = std::exp(out.log_std(i, c));
      const double u = out.pre_squash(i, c);
      const double z = (u - out.mean(i, c)) / sigma;
      expect += -0.5 * z * z - std::log(sigma) - 0.5 * std::log(kTwoPi);
      expect -= std::log(1.0 - std::tanh(u) * std::tanh(u));
    }
    EXPECT_NEAR(out.log_prob[c], expect, 1e-4);
    for (int i = 0; i < 2; ++i) EXPECT_LE(std::abs(out.action(i, c)), 1.0);
  }
}

TEST(Policy, LogStdIsClipped) {
  std::mt19937_64 rng(5);
  GaussianPolicy policy(1, 1, 4, rng);
  Matrix raw(2, 2);
  raw << 0.0, 0.0, -50.0, 50.0;
  const auto out = policy.from_network_output(raw, Matrix::Zero(1, 2));
  EXPECT_EQ(out.log_std(0, 0), kLogStdMin);
  EXPECT_EQ(out.log_std(0, 1), kLogStdMax);
}

TEST(Policy, SampleActionChecksSize) {
  std::mt19937_64 rng(6);
  GaussianPolicy policy(3, 1, 4, rng);
  const std::vector<double> obs(2);
  EXPECT_THROW(sample_action(policy, obs, rng), std::invalid_argument);
}

TEST(Replay, UniformSamplingChiSquare) {
  ReplayBuffer buf(100, 1, 1);
  const int n = 10;
  for (int i = 0; i < n; ++i) buf.add({{double(i)}, {0.0}, 0.0, {0.0}, false});
  std::mt19937_64 rng(7);
  std::vector<int> counts(n);
  const int draws = 100'000;
  for (std::size_t idx : buf.sample_indices(draws, rng)) ++counts[idx];
  double chi2 = 0.0;
  const double expect = double(draws) / n;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  EXPECT_LT(chi2, 27.88);  // df = 9, p = 0.001
}

TEST(Replay, RingOverwritesOldest) {
  ReplayBuffer buf(3, 1, 1);
  for (int i = 0; i < 5; ++i) buf.add({{double(i)}, {0.0}, double(i), {0.0}, false});
  EXPECT_EQ(buf.size(), 3u);
  std::mt19937_64 rng(8);
  const Batch b = buf.sample(300, rng);
  EXPECT_GE(b.reward.minCoeff(), 2.0);
  EXPECT_EQ(b.reward.maxCoeff(), 4.0);
}

TEST(Replay, RejectsBadInput) {
  EXPECT_THROW(ReplayBuffer(0, 1, 1), std::invalid_argument);
  ReplayBuffer buf(3, 2, 1);
  EXPECT_THROW(buf.add({{1.0}, {0.0}, 0.0, {1.0, 2.0}, false}), std::invalid_argument);
  std::mt19937_64 rng(1);
  EXPECT_THROW(buf.sample(4, rng), std::logic_error);
}

TEST(Sac, UpdateNeedsWarmBuffer) {
  SacAgent agent(2, 1, small_config(), 1);
  ReplayBuffer buf(100, 2, 1);
  buf.add({{0.0, 0.0}, {0.0}, 0.0, {0.0, 0.0}, false});
  EXPECT_THROW(sac_update(agent, buf), std::logic_error);
}

TEST(Sac, ZeroDiscountTargetIsScaledReward) {
  SacConfig c = small_config();
  c.gamma = 0.0;
  c.reward_scale = 3.0;
  SacAgent agent(4, 2, c, 2);
  const Batch b = random_batch(4, 2, 16, 3);
  const Vector y = agent.critic_targets(b);
  for (int i = 0; i < 16; ++i) EXPECT_DOUBLE_EQ(y[i], 3.0 * b.reward[i]);
}

TEST(Sac, TerminalTransitionsDoNotBootstrap) {
  SacAgent agent(4, 2, small_config(), 2);
  Batch b = random_batch(4, 2, 16, 3);
  b.done.setOnes();
  const Vector y = agent.critic_targets(b);
  for (int i = 0; i < 16; ++i) EXPECT_DOUBLE_EQ(y[i], b.reward[i]);
}

TEST(Sac, UnitTauCopiesCriticsIntoTargets) {
  SacConfig c = small_config();
  c.tau = 1.0;
  SacAgent agent(4, 2, c, 4);
  agent.update(random_batch(4, 2, 32, 5));
  EXPECT_EQ(agent.target1().flat_parameters(), agent.critic1().flat_parameters());
  EXPECT_EQ(agent.target2().flat_parameters(), agent.critic2().flat_parameters());
}

TEST(Sac, SmallTauMovesTargetsSlowly) {
  SacAgent agent(4, 2, small_config(), 4);
  const auto before = agent.target1().flat_parameters();
  agent.update(random_batch(4, 2, 32, 5));
  const auto after = agent.target1().flat_parameters();
  const auto critic = agent.critic1().flat_parameters();
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_NEAR(after[i], 0.995 * before[i] + 0.005 * critic[i], 1e-12);
  }
}

TEST(Sac, TwinCriticSwapLeavesTargetsUnchanged) {
  SacAgent a(4, 2, small_config(), 6);
  SacAgent b = a;
  b.swap_critics();
  const Batch batch = random_batch(4, 2, 32, 7);
  const Vector ya = a.critic_targets(batch);
  const Vector yb = b.critic_targets(batch);
  EXPECT_EQ(ya, yb);
  std::mt19937_64 rng(1);
  const Matrix noise = standard_normal(2, 32, rng);
  EXPECT_EQ(a.actor_objective(batch.obs, noise), b.actor_objective(batch.obs, noise));
}

TEST(Sac, ActorGradientMatchesFiniteDifferences) {
  for (auto [obs, act] : {std::pair{2, 1}, std::pair{6, 3}}) {
    SacAgent agent(obs, act, small_config(), 10 + obs);
    // Move the critics off their initialisation so the gradient is not trivial.
    for (int k = 0; k < 5; ++k) agent.update(random_batch(obs, act, 32, 20 + k));
    std::mt19937_64 rng(3);
    const Matrix o = standard_normal(obs, 100, rng);
    const Matrix noise = standard_normal(act, 100, rng);
    const auto g = agent.actor_gradient(o, noise);
    std::vector<double> analytic;
    for (const auto& l : g.grads.layers) {
      analytic.insert(analytic.end(), l.weight.data(), l.weight.data() + l.weight.size());
      analytic.insert(analytic.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
    std::vector<double> theta = agent.policy().net().flat_parameters();
    Vector numeric(static_cast<Eigen::Index>(theta.size()));
    const double h = 1e-5;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double keep = theta[k];
      theta[k] = keep + h;
      agent.policy().net().set_flat_parameters(theta);
      const double up = agent.actor_objective(o, noise);
      theta[k] = keep - h;
      agent.policy().net().set_flat_parameters(theta);
      const double down = agent.actor_objective(o, noise);
      theta[k] = keep;
      numeric[static_cast<Eigen::Index>(k)] = (up - down) / (2 * h);
    }
    agent.policy().net().set_flat_parameters(theta);
    const Eigen::Map<const Vector> a(analytic.data(), static_cast<Eigen::Index>(analytic.size()));
    EXPECT_LT((a - numeric).norm() / std::max(a.norm(), numeric.norm()), 1e-4);
  }
}

TEST(Sac, OverfitsOneBatch) {
  SacConfig c = small_config();
  c.gamma = 0.0;
  c.lr = 3e-3;
  c.hidden = 32;
  SacAgent agent(3, 1, c, 12);
  const Batch b = random_batch(3, 1, 16, 13);
  double first = 0.0, last = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const LossReport r = agent.update(b);
    if (k == 0) first = r.critic1;
    last = r.critic1;
  }
  EXPECT_LT(last, 1e-3 * first);
}

TEST(Sac, TemperatureFollowsEntropyGap) {
  SacConfig c = small_config();
  c.target_entropy = -50.0;  // far below anything the policy produces
  SacAgent agent(2, 1, c, 14);
  const double before = agent.alpha();
  for (int k = 0; k < 20; ++k) agent.update(random_batch(2, 1, 32, 30 + k));
  EXPECT_LT(agent.alpha(), before);

  c.target_entropy = 50.0;
  SacAgent other(2, 1, c, 14);
  for (int k = 0; k < 20; ++k) other.update(random_batch(2, 1, 32, 30 + k));
  EXPECT_GT(other.alpha(), before);

  c.auto_alpha = false;
  SacAgent fixed(2, 1, c, 14);
  for (int k = 0; k < 5; ++k) fixed.update(random_batch(2, 1, 32, 30 + k));
  EXPECT_EQ(fixed.alpha(), c.init_alpha);
}

TEST(Sac, CheckpointRoundTrip) {
  SacAgent a(5, 2, small_config(), 15);
  a.update(random_batch(5, 2, 32, 16));
  std::stringstream ss;
  a.save(ss, "abc123");
  SacAgent b(5, 2, small_config(), 99);
  EXPECT_EQ(b.load(ss), "abc123");
  EXPECT_EQ(a.policy().net().flat_parameters(), b.policy().net().flat_parameters());
  EXPECT_EQ(a.critic2().flat_parameters(), b.critic2().flat_parameters());
  EXPECT_EQ(a.target1().flat_parameters(), b.target1().flat_parameters());
  EXPECT_EQ(a.alpha(), b.alpha());
  const std::vector<double> obs{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_EQ(a.act(obs, true), b.act(obs, true));
}

TEST(Sac, CheckpointRejectsMismatch) {
  SacAgent a(5, 2, small_config(), 15);
  std::stringstream ss;
  a.save(ss, "h");
  SacAgent wrong(4, 2, small_config(), 15);
  EXPECT_THROW(wrong.load(ss), std::runtime_error);
  std::stringstream junk("not a checkpoint");
  EXPECT_THROW(a.load(junk), std::runtime_error);
  std::stringstream truncated;
  a.save(truncated, "h");
  std::string text = truncated.str();
  std::stringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(a.load(cut), std::runtime_error);
}

TEST(Sac, ConfigValidation) {
  SacConfig c;
  c.tau = 0.0;
  EXPECT_THROW(SacAgent(2, 1, c, 1), ConfigError);
  const Config bad = Config::parse("sac.gamma = 1.5\n");
  EXPECT_THROW(sac_config_from(bad), ConfigError);
  const Config good = Config::parse("sac.batch_size = 64\nsac.bootstrap_goal = true\n");
  EXPECT_EQ(sac_config_from(good).batch_size, 64);
  EXPECT_TRUE(sac_config_from(good).bootstrap_goal);
}
