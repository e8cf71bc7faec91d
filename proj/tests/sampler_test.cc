#include "dronecatch/sampler.h"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dronecatch/error.h"

namespace dronecatch {
namespace {

Eigen::VectorXd RandomVector(int n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0, scale);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = g(rng);
  return x;
}

TEST(GaussianPolicyTest, OutputScaling) {
  Mlp net({2, 4});
  net.mutable_bias(0) << 0.2, -0.4, 0.5, -9.0;
  GaussianPolicy p(net, 2, 25.0);
  GaussianPolicy::Distribution d = p.Evaluate(Eigen::VectorXd::Zero(2));
  EXPECT_DOUBLE_EQ(d.mean(0), 5.0);
  EXPECT_DOUBLE_EQ(d.mean(1), -10.0);
  EXPECT_NEAR(d.log_std(0), 0.5 + std::log(25.0), 1e-15);
  EXPECT_NEAR(d.log_std(1), kMinLogStd + std::log(25.0), 1e-15);
  EXPECT_EQ(d.raw_log_std(1), -9.0);
}

TEST(GaussianPolicyTest, RejectsBadShapes) {
  EXPECT_THROW(GaussianPolicy(Mlp({2, 3}), 2, 25.0), Error);
  EXPECT_THROW(GaussianPolicy(Mlp({2, 4}), 2, 0.0), Error);
}

TEST(GaussianPolicyTest, LogProbAndEntropyFormulas) {
  GaussianPolicy::Distribution d;
  d.mean = Eigen::Vector3d(1.0, -2.0, 0.5);
  d.log_std = Eigen::Vector3d(0.0, std::log(2.0), std::log(0.5));
  d.raw_log_std = d.log_std;
  Eigen::Vector3d x(1.5, 0.0, 0.5);
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) {
    double s = std::exp(d.log_std(i));
    expect += std::log(std::exp(-0.5 * std::pow((x(i) - d.mean(i)) / s, 2)) /
                       (s * std::sqrt(2 * std::numbers::pi)));
  }
  EXPECT_NEAR(GaussianPolicy::LogProb(d, x), expect, 1e-12);
  double first = std::log(std::exp(-0.125) / std::sqrt(2 * std::numbers::pi));
  EXPECT_NEAR(GaussianPolicy::LogProb(d, x, 1), first, 1e-12);
  EXPECT_THROW(GaussianPolicy::LogProb(d, x, 4), Error);
  double h = 0.0;
  for (int i = 0; i < 3; ++i) h += 0.5 * std::log(2 * std::numbers::pi * std::numbers::e) + d.log_std(i);
  EXPECT_NEAR(GaussianPolicy::Entropy(d), h, 1e-12);
}

TEST(GaussianPolicyTest, JsonRoundTrip) {
  Rng rng(1);
  GaussianPolicy p = GaussianPolicy::Create(5, 6, {8}, 25.0, rng);
  GaussianPolicy back = GaussianPolicy::FromJson(nlohmann::json::parse(p.ToJson().dump()));
  EXPECT_EQ(back.net().Parameters(), p.net().Parameters());
  EXPECT_EQ(back.action_dim(), 6);
  EXPECT_THROW(GaussianPolicy::FromJson(nlohmann::json{{"format", "nope"}}), Error);
}

TEST(PolicySamplerTest, CandidatesAreIndexedAndClamped) {
  Eigen::VectorXd mean = Eigen::VectorXd::Constant(6, 20.0);
  Eigen::VectorXd std = Eigen::VectorXd::Constant(6, 10.0);
  PolicySampler s(mean, std, 25.0);
  std::vector<double> a(6), b(6);
  s.Candidate(5, 3, 2, a.data());
  for (int i = 0; i < 50; ++i) s.Candidate(5, i, 2, b.data());
  s.Candidate(5, 3, 2, b.data());
  EXPECT_EQ(a, b);
  for (int i = 0; i < 500; ++i) {
    s.Candidate(5, i, 2, a.data());
    for (double v : a) EXPECT_LE(std::abs(v), 25.0);
  }
  EXPECT_THROW(s.Candidate(5, 0, 3, a.data()), Error);
}

TEST(PolicySamplerTest, RawDrawMoments) {
  Eigen::VectorXd mean(3), std(3);
  mean << 1.0, -2.0, 0.0;
  std << 0.5, 2.0, 3.0;
  PolicySampler s(mean, std, 25.0);
  const int n = 20000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3), sq = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = s.RawCandidate(9, i);
    sum += x;
    sq += x.cwiseProduct(x);
  }
  for (int i = 0; i < 3; ++i) {
    double m = sum(i) / n;
    double sd = std::sqrt(sq(i) / n - m * m);
    EXPECT_NEAR(m, mean(i), 4 * std(i) / std::sqrt(n));
    EXPECT_NEAR(sd, std(i), 0.03 * std(i));
  }
}

TEST(PolicyFeaturesTest, Sizes) {
  for (int h : {1, 3, 6}) {
    Forecast f;
    f.positions.assign(h, Vec3{1, 2, 3});
    EXPECT_EQ(PolicyFeatures(AgentState{}, f, ObjectState{}).size(), PolicyInputSize(h));
  }
  ObservationWindow w{Observation{0, Vec3{}}, Observation{1, Vec3{}}, Observation{2, Vec3{}}};
  EXPECT_EQ(ModelFreeFeatures(w, AgentState{}).size(), kModelFreeInputSize);
  w[0].pos.reset();
  EXPECT_THROW(ModelFreeFeatures(w, AgentState{}), Error);
}

TEST(PolicySampleTest, LogProbsMatchDraws) {
  Rng rng(2);
  const int h = 2;
  GaussianPolicy p = GaussianPolicy::Create(PolicyInputSize(h), 3 * h, {8}, 25.0, rng);
  Eigen::VectorXd x = RandomVector(PolicyInputSize(h), rng);
  PlannerConfig cfg;
  cfg.n_samples = 20;
  cfg.horizon = h;
  std::vector<Eigen::VectorXd> raw;
  std::vector<double> lp;
  std::vector<ActionSequence> seqs = PolicySample(p, x, cfg, rng, &raw, &lp);
  ASSERT_EQ(seqs.size(), 20u);
  ASSERT_EQ(raw.size(), 20u);
  GaussianPolicy::Distribution d = p.Evaluate(x);
  for (size_t i = 0; i < seqs.size(); ++i) {
    ASSERT_EQ(seqs[i].size(), static_cast<size_t>(h));
    EXPECT_NEAR(lp[i], GaussianPolicy::LogProb(d, raw[i], 3), 1e-12);
    EXPECT_EQ(seqs[i][0].x, std::clamp(raw[i](0), -25.0, 25.0));
  }
}

TEST(UniformSampleTest, ShapeAndBounds) {
  Rng rng(3);
  PlannerConfig cfg;
  cfg.n_samples = 100;
  cfg.horizon = 4;
  DroneSpec drone = WithMobility(DroneSpec{}, 0.6);
  std::vector<ActionSequence> s = UniformSample(cfg, drone, rng);
  ASSERT_EQ(s.size(), 100u);
  for (const ActionSequence& seq : s) {
    ASSERT_EQ(seq.size(), 4u);
    for (const Vec3& a : seq)
      for (int i = 0; i < 3; ++i) EXPECT_LE(std::abs(a[i]), 15.0);
  }
}

// Three logged steps with known distances; traces on the first two.
EpisodeRecord SyntheticRecord(const GaussianPolicy& p, Rng& rng, bool caught) {
  EpisodeRecord rec;
  for (int t = 0; t < 3; ++t) {
    StepLog s;
    s.t = t;
    s.agent.d = {0, 0, 0};
    s.object.o = {1.0 + t, 0, 0};
    if (t < 2) s.trace = PolicyTrace{RandomVector(p.input_dim(), rng), RandomVector(p.action_dim(), rng, 20)};
    rec.steps.push_back(s);
  }
  rec.outcome = caught ? Outcome::kCaught : Outcome::kGround;
  return rec;
}

TEST(ComputeReturnsTest, HandComputed) {
  Rng rng(4);
  GaussianPolicy p = GaussianPolicy::Create(4, 3, {4}, 25.0, rng);
  EpisodeRecord rec = SyntheticRecord(p, rng, true);
  RewardSpec spec;
  std::vector<double> g = ComputeReturns(rec, spec);
  double r2 = -0.03 + 1.0, r1 = -0.02, r0 = -0.01;
  ASSERT_EQ(g.size(), 3u);
  EXPECT_NEAR(g[2], r2, 1e-15);
  EXPECT_NEAR(g[1], r1 + 0.99 * r2, 1e-15);
  EXPECT_NEAR(g[0], r0 + 0.99 * r1 + 0.99 * 0.99 * r2, 1e-15);
}

TEST(ActorCriticTest, EmptyBatchThrows) {
  Rng rng(5);
  GaussianPolicy p = GaussianPolicy::Create(4, 3, {4}, 25.0, rng);
  Critic c = Critic::Create(5, {4}, rng);
  EpisodeRecord rec = SyntheticRecord(p, rng, false);
  for (StepLog& s : rec.steps) s.trace.reset();
  ActorCriticState st;
  std::vector<EpisodeRecord> batch{rec};
  try {
    ActorCriticUpdate(p, c, batch, RewardSpec{}, ActorCriticConfig{}, st);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyBatch);
  }
  ActorCriticConfig bad;
  bad.gae_lambda = 1.5;
  EXPECT_THROW(ActorCriticUpdate(p, c, batch, RewardSpec{}, bad, st), Error);
}

// The first Adam step moves every parameter against the sign of its gradient,
// so the update direction can be checked against finite differences of
//   S = -(1/B) sum_k A_k log pi(draw_k[:3]) - c_H (1/B) sum_k H(pi(x_k)).
TEST(ActorCriticTest, PolicyStepFollowsSurrogateGradient) {
  Rng rng(6);
  const int h = 2;
  GaussianPolicy p = GaussianPolicy::Create(5, 3 * h, {6}, 25.0, rng, -0.5);
  Critic c(Mlp({6, 1}));  // V = 0, so A_t = G_t
  std::vector<EpisodeRecord> batch{SyntheticRecord(p, rng, true), SyntheticRecord(p, rng, false)};
  RewardSpec spec;
  ActorCriticConfig cfg;
  cfg.normalize_advantages = false;
  cfg.policy_learning_rate = 1e-9;

  struct Item {
    const PolicyTrace* trace;
    double adv;
  };
  std::vector<Item> items;
  for (const EpisodeRecord& rec : batch) {
    std::vector<double> g = ComputeReturns(rec, spec);
    for (size_t t = 0; t < rec.steps.size(); ++t)
      if (rec.steps[t].trace) items.push_back({&*rec.steps[t].trace, g[t]});
  }
  auto surrogate = [&](const GaussianPolicy& pol) {
    double s = 0.0;
    for (const Item& it : items) {
      GaussianPolicy::Distribution d = pol.Evaluate(it.trace->features);
      s += -it.adv * GaussianPolicy::LogProb(d, it.trace->draw, 3) -
           cfg.entropy_coefficient * GaussianPolicy::Entropy(d);
    }
    return s / items.size();
  };

  std::vector<double> before = p.net().Parameters();
  GaussianPolicy probe = p;
  ActorCriticState st;
  ActorCriticStats stats = ActorCriticUpdate(p, c, batch, spec, cfg, st);
  EXPECT_EQ(stats.samples, 4);
  double mean_adv = 0.0;
  for (const Item& it : items) mean_adv += it.adv / items.size();
  EXPECT_NEAR(stats.mean_advantage, mean_adv, 1e-12);

  std::vector<double> after = p.net().Parameters();
  const double eps = 1e-6;
  int checked = 0;
  for (size_t i = 0; i < before.size(); ++i) {
    std::vector<double> q = before;
    q[i] += eps;
    probe.mutable_net().SetParameters(q);
    double up = surrogate(probe);
    q[i] = before[i] - eps;
    probe.mutable_net().SetParameters(q);
    double numeric = (up - surrogate(probe)) / (2 * eps);
    if (std::abs(numeric) < 1e-5) continue;
    double step = after[i] - before[i];
    EXPECT_LT(step * numeric, 0.0) << "parameter " << i;
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(ActorCriticTest, PositiveAdvantageRaisesLogProb) {
  Rng rng(7);
  GaussianPolicy p = GaussianPolicy::Create(5, 3, {8}, 25.0, rng);
  Critic c(Mlp({6, 1}));
  EpisodeRecord rec = SyntheticRecord(p, rng, true);
  rec.steps[1].trace.reset();
  std::vector<EpisodeRecord> batch{rec};
  ActorCriticConfig cfg;
  cfg.normalize_advantages = false;
  cfg.entropy_coefficient = 0.0;
  const PolicyTrace& tr = *rec.steps[0].trace;
  double lp0 = GaussianPolicy::LogProb(p.Evaluate(tr.features), tr.draw, 3);
  ActorCriticState st;
  for (int i = 0; i < 20; ++i) ActorCriticUpdate(p, c, batch, RewardSpec{}, cfg, st);
  EXPECT_GT(GaussianPolicy::LogProb(p.Evaluate(tr.features), tr.draw, 3), lp0);
}

TEST(ActorCriticTest, GaeZeroUsesOneStepDifferences) {
  Rng rng(8);
  GaussianPolicy p = GaussianPolicy::Create(5, 3, {4}, 25.0, rng);
  Mlp net({6, 1});
  net.mutable_bias(0)(0) = 0.3;  // V = 0.3 everywhere
  Critic c(net);
  EpisodeRecord rec = SyntheticRecord(p, rng, true);
  std::vector<EpisodeRecord> batch{rec};
  RewardSpec spec;
  ActorCriticConfig cfg;
  cfg.gae_lambda = 0.0;
  cfg.normalize_advantages = false;
  ActorCriticState st;
  ActorCriticStats s = ActorCriticUpdate(p, c, batch, spec, cfg, st);
  std::vector<double> r = StepRewards(rec, spec);
  std::vector<double> g = DiscountedSums(r, spec.gamma);
  // Step 1's successor is untraced and bootstraps from its return.
  double a0 = r[0] + spec.gamma * 0.3 - 0.3;
  double a1 = r[1] + spec.gamma * g[2] - 0.3;
  EXPECT_NEAR(s.mean_advantage, (a0 + a1) / 2, 1e-12);
}

TEST(CriticTest, RegressionReducesError) {
  Rng rng(9);
  Critic c = Critic::Create(4, {16}, rng);
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  for (int i = 0; i < 64; ++i) {
    xs.push_back(RandomVector(4, rng));
    ys.push_back(0.5 * xs.back()(0) - xs.back()(2));
  }
  AdamState adam;
  adam.learning_rate = 1e-2;
  double first = CriticRegressionStep(c, xs, ys, adam);
  double last = first;
  for (int i = 0; i < 300; ++i) last = CriticRegressionStep(c, xs, ys, adam);
  EXPECT_LT(last, 0.1 * first);
  std::vector<double> short_ys(3);
  EXPECT_THROW(CriticRegressionStep(c, xs, short_ys, adam), Error);
}

TEST(CriticTest, FeaturesAppendScaledStep) {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd f = CriticFeatures(x, 25);
  ASSERT_EQ(f.size(), 4);
  EXPECT_EQ(f.head(3), x);
  EXPECT_DOUBLE_EQ(f(3), 25.0 / kCriticStepScale);
}

TEST(ModelFreeActTest, MissingWindowIsZero) {
  Rng rng(10);
  GaussianPolicy p = GaussianPolicy::Create(kModelFreeInputSize, 3, {8}, 25.0, rng);
  EXPECT_EQ(ModelFreeAct(p, std::nullopt, AgentState{}), Vec3{});
  ObservationWindow w{Observation{0, Vec3{}}, Observation{1, std::nullopt}, Observation{2, Vec3{}}};
  EXPECT_EQ(ModelFreeAct(p, w, AgentState{}), Vec3{});
}

TEST(ModelFreeActTest, MeanIsClamped) {
  Mlp net({kModelFreeInputSize, 6});
  net.mutable_bias(0) << 3.0, -0.2, -4.0, 0, 0, 0;
  GaussianPolicy p(net, 3, 25.0);
  ObservationWindow w{Observation{0, Vec3{}}, Observation{1, Vec3{}}, Observation{2, Vec3{}}};
  EXPECT_EQ(ModelFreeAct(p, w, AgentState{}), (Vec3{25.0, -5.0, -25.0}));
}

}  // namespace
}  // namespace dronecatch
