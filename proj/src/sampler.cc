#include "dronecatch/sampler.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dronecatch/error.h"

namespace dronecatch {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
constexpr const char* kPolicyFormat = "dronecatch-policy";
constexpr const char* kCriticFormat = "dronecatch-critic";

void Put(Eigen::VectorXd& x, int at, const Vec3& v, double scale, double limit = 1e9) {
  x(at) = std::clamp(v.x * scale, -limit, limit);
  x(at + 1) = std::clamp(v.y * scale, -limit, limit);
  x(at + 2) = std::clamp(v.z * scale, -limit, limit);
}

void PutAgent(Eigen::VectorXd& x, int at, const AgentState& agent) {
  Put(x, at, agent.d, 1.0 / 3.0);
  Put(x, at + 3, agent.v, 1.0 / 10.0);
  Put(x, at + 6, agent.a, 1.0 / 25.0);
  x(at + 9) = agent.phi / std::numbers::pi;
  x(at + 10) = agent.theta / std::numbers::pi;
}

}  // namespace

GaussianPolicy::GaussianPolicy(Mlp net, int action_dim, double max_accel)
    : net_(std::move(net)), action_dim_(action_dim), max_accel_(max_accel) {
  if (action_dim_ < 1 || net_.output_size() != 2 * action_dim_) {
    throw Error(ErrorKind::kDimensionMismatch, "policy network must emit 2 x action_dim values");
  }
  if (!(max_accel_ > 0.0)) throw Error(ErrorKind::kInvalidArgument, "max_accel must be positive");
}

GaussianPolicy GaussianPolicy::Create(int input_dim, int action_dim, std::vector<int> hidden,
                                      double max_accel, Rng& rng, double initial_log_std) {
  std::vector<int> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2 * action_dim);
  Mlp net = Mlp::Random(sizes, rng, 0.01);
  Eigen::VectorXd& b = net.mutable_bias(net.num_layers() - 1);
  b.tail(action_dim).setConstant(initial_log_std);
  return GaussianPolicy(std::move(net), action_dim, max_accel);
}

GaussianPolicy::Distribution GaussianPolicy::Evaluate(const Eigen::VectorXd& features,
                                                      MlpCache* cache) const {
  Eigen::VectorXd out = net_.Forward(features, cache);
  Distribution d;
  d.mean = out.head(action_dim_) * max_accel_;
  d.raw_log_std = out.tail(action_dim_);
  d.log_std = (d.raw_log_std.cwiseMax(kMinLogStd).cwiseMin(kMaxLogStd).array() +
               std::log(max_accel_)).matrix();
  return d;
}

double GaussianPolicy::LogProb(const Distribution& dist, const Eigen::VectorXd& draw, int dims) {
  int n = dims < 0 ? static_cast<int>(dist.mean.size()) : dims;
  if (n > dist.mean.size() || n > draw.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "draw shorter than requested dims");
  }
  double lp = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = (draw(i) - dist.mean(i)) * std::exp(-dist.log_std(i));
    lp += -0.5 * z * z - dist.log_std(i) - 0.5 * kLog2Pi;
  }
  return lp;
}

double GaussianPolicy::Entropy(const Distribution& dist) {
  return dist.log_std.sum() + 0.5 * (1.0 + kLog2Pi) * static_cast<double>(dist.log_std.size());
}

nlohmann::json GaussianPolicy::ToJson() const {
  return {{"format", kPolicyFormat},
          {"version", 1},
          {"action_dim", action_dim_},
          {"max_accel", max_accel_},
          {"net", net_.ToJson()}};
}

GaussianPolicy GaussianPolicy::FromJson(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kPolicyFormat) {
      throw Error(ErrorKind::kParse, "not a policy checkpoint");
    }
    return GaussianPolicy(Mlp::FromJson(j.at("net")), j.at("action_dim").get<int>(),
                          j.at("max_accel").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("policy checkpoint: ") + e.what());
  }
}

Critic::Critic(Mlp net) : net_(std::move(net)) {
  if (net_.output_size() != 1) throw Error(ErrorKind::kDimensionMismatch, "critic emits one value");
}

Critic Critic::Create(int input_dim, std::vector<int> hidden, Rng& rng) {
  std::vector<int> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return Critic(Mlp::Random(sizes, rng, 0.1));
}

double Critic::Value(const Eigen::VectorXd& features, MlpCache* cache) const {
  return net_.Forward(features, cache)(0);
}

nlohmann::json Critic::ToJson() const {
  return {{"format", kCriticFormat}, {"version", 1}, {"net", net_.ToJson()}};
}

Critic Critic::FromJson(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCriticFormat) {
      throw Error(ErrorKind::kParse, "not a critic checkpoint");
    }
    return Critic(Mlp::FromJson(j.at("net")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("critic checkpoint: ") + e.what());
  }
}

Eigen::VectorXd CriticFeatures(const Eigen::VectorXd& policy_features, int step) {
  Eigen::VectorXd x(policy_features.size() + 1);
  x << policy_features, static_cast<double>(step) / kCriticStepScale;
  return x;
}

int PolicyInputSize(int horizon) { return 11 + 3 * horizon + 9; }

Eigen::VectorXd PolicyFeatures(const AgentState& agent, const Forecast& forecast,
                               const ObjectState& estimate) {
  const int h = forecast.horizon();
  Eigen::VectorXd x(PolicyInputSize(h));
  PutAgent(x, 0, agent);
  for (int k = 0; k < h; ++k) Put(x, 11 + 3 * k, forecast.positions[k] - agent.d, 0.5, 4.0);
  const int at = 11 + 3 * h;
  Put(x, at, estimate.o - agent.d, 0.5, 4.0);
  Put(x, at + 3, estimate.v, 1.0 / 10.0, 4.0);
  Put(x, at + 6, estimate.a, 1.0 / 25.0, 4.0);
  return x;
}

Eigen::VectorXd ModelFreeFeatures(const ObservationWindow& window, const AgentState& agent) {
  if (!FullyVisible(window)) {
    throw Error(ErrorKind::kInsufficientObservations, "window has missing observations");
  }
  Eigen::VectorXd x(kModelFreeInputSize);
  for (int i = 0; i < 3; ++i) Put(x, 3 * i, *window[i].pos - agent.d, 0.5, 4.0);
  PutAgent(x, 9, agent);
  return x;
}

PolicySampler::PolicySampler(Eigen::VectorXd mean, Eigen::VectorXd std, double max_accel)
    : mean_(std::move(mean)), std_(std::move(std)), max_accel_(max_accel) {
  if (mean_.size() != std_.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "mean and std lengths differ");
  }
}

PolicySampler::PolicySampler(const GaussianPolicy::Distribution& dist, double max_accel)
    : PolicySampler(dist.mean, dist.log_std.array().exp().matrix(), max_accel) {}

Eigen::VectorXd PolicySampler::RawCandidate(uint64_t seed, int index) const {
  StreamRng rng(DeriveSeed(seed, static_cast<uint64_t>(index)));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd draw(mean_.size());
  for (Eigen::Index j = 0; j < mean_.size(); ++j) draw(j) = mean_(j) + std_(j) * normal(rng);
  return draw;
}

void PolicySampler::Candidate(uint64_t seed, int index, int horizon, double* out) const {
  if (3 * horizon != mean_.size()) {
    throw Error(ErrorKind::kLengthMismatch, "policy action dim differs from 3 x horizon");
  }
  Eigen::VectorXd draw = RawCandidate(seed, index);
  for (Eigen::Index j = 0; j < draw.size(); ++j) {
    out[j] = std::clamp(draw(j), -max_accel_, max_accel_);
  }
}

std::vector<ActionSequence> UniformSample(const PlannerConfig& cfg, const DroneSpec& drone,
                                          Rng& rng) {
  cfg.Validate();
  UniformSampler sampler(drone.max_accel);
  uint64_t seed = rng();
  std::vector<ActionSequence> out(cfg.n_samples);
  std::vector<double> buf(3 * cfg.horizon);
  for (int i = 0; i < cfg.n_samples; ++i) {
    sampler.Candidate(seed, i, cfg.horizon, buf.data());
    for (int k = 0; k < cfg.horizon; ++k) out[i].push_back({buf[3 * k], buf[3 * k + 1], buf[3 * k + 2]});
  }
  return out;
}

std::vector<ActionSequence> PolicySample(const GaussianPolicy& policy,
                                         const Eigen::VectorXd& features,
                                         const PlannerConfig& cfg, Rng& rng,
                                         std::vector<Eigen::VectorXd>* raw,
                                         std::vector<double>* log_probs) {
  cfg.Validate();
  GaussianPolicy::Distribution dist = policy.Evaluate(features);
  PolicySampler sampler(dist, policy.max_accel());
  uint64_t seed = rng();
  std::vector<ActionSequence> out(cfg.n_samples);
  std::vector<double> buf(3 * cfg.horizon);
  for (int i = 0; i < cfg.n_samples; ++i) {
    sampler.Candidate(seed, i, cfg.horizon, buf.data());
    for (int k = 0; k < cfg.horizon; ++k) out[i].push_back({buf[3 * k], buf[3 * k + 1], buf[3 * k + 2]});
    if (raw != nullptr || log_probs != nullptr) {
      Eigen::VectorXd draw = sampler.RawCandidate(seed, i);
      if (log_probs != nullptr) log_probs->push_back(GaussianPolicy::LogProb(dist, draw, 3));
      if (raw != nullptr) raw->push_back(std::move(draw));
    }
  }
  return out;
}

std::vector<double> ComputeReturns(const EpisodeRecord& record, const RewardSpec& spec) {
  spec.Validate();
  return DiscountedSums(StepRewards(record, spec), spec.gamma);
}

ActorCriticStats ActorCriticUpdate(GaussianPolicy& policy, Critic& critic,
                                   std::span<const EpisodeRecord> batch, const RewardSpec& spec,
                                   const ActorCriticConfig& cfg, ActorCriticState& state,
                                   int credit_dims) {
  struct Sample {
    const PolicyTrace* trace;
    Eigen::VectorXd critic_features;
    double ret;
    double value;
    double adv;
  };
  if (!(cfg.gae_lambda >= 0.0 && cfg.gae_lambda <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "gae_lambda must lie in [0, 1]");
  }
  std::vector<Sample> samples;
  for (const EpisodeRecord& rec : batch) {
    std::vector<double> r = StepRewards(rec, spec);
    std::vector<double> g = DiscountedSums(r, spec.gamma);
    const size_t first = samples.size();
    std::vector<int> at(rec.steps.size(), -1);
    for (size_t t = 0; t < rec.steps.size(); ++t) {
      if (const auto& trace = rec.steps[t].trace) {
        at[t] = static_cast<int>(samples.size());
        Eigen::VectorXd cf = CriticFeatures(trace->features, rec.steps[t].t);
        double v = critic.Value(cf);
        samples.push_back({&*trace, std::move(cf), g[t], v, 0.0});
      }
    }
    if (samples.size() == first) continue;
    // A_t = sum_k (gamma lambda)^k delta_{t+k}; lambda = 1 gives G_t - V_t.
    // Untraced successors bootstrap from their return.
    double running = 0.0;
    for (size_t t = rec.steps.size(); t-- > 0;) {
      if (at[t] < 0) {
        running = 0.0;
        continue;
      }
      Sample& s = samples[at[t]];
      double next = 0.0;
      if (t + 1 < rec.steps.size()) next = at[t + 1] >= 0 ? samples[at[t + 1]].value : g[t + 1];
      double delta = r[t] + spec.gamma * next - s.value;
      running = delta + spec.gamma * cfg.gae_lambda * running;
      s.adv = running;
    }
  }
  if (samples.empty()) throw Error(ErrorKind::kEmptyBatch, "batch has no traced steps");

  const int dim = policy.action_dim();
  credit_dims = std::min(credit_dims, dim);
  const double inv_b = 1.0 / static_cast<double>(samples.size());
  MlpGradients pg = policy.net().ZeroGradients();
  MlpGradients cg = critic.net().ZeroGradients();
  MlpCache pcache;
  MlpCache ccache;
  ActorCriticStats stats;
  stats.samples = static_cast<int>(samples.size());
  double adv_shift = 0.0;
  double adv_scale = 1.0;
  if (cfg.normalize_advantages && samples.size() > 1) {
    double sq = 0.0;
    for (const Sample& s : samples) adv_shift += s.adv * inv_b;
    for (const Sample& s : samples) {
      double d = s.adv - adv_shift;
      sq += d * d * inv_b;
    }
    if (sq > 1e-24) {
      adv_scale = 1.0 / std::sqrt(sq);
    } else {
      adv_shift = 0.0;
    }
  }
  for (size_t k = 0; k < samples.size(); ++k) {
    const Sample& s = samples[k];
    GaussianPolicy::Distribution dist = policy.Evaluate(s.trace->features, &pcache);
    double value = critic.Value(s.critic_features, &ccache);
    double adv = s.adv;
    stats.mean_advantage += adv * inv_b;
    adv = (adv - adv_shift) * adv_scale;

    Eigen::VectorXd og = Eigen::VectorXd::Zero(2 * dim);
    for (int i = 0; i < dim; ++i) {
      double sigma = std::exp(dist.log_std(i));
      double dls = -cfg.entropy_coefficient;
      if (i < credit_dims) {
        double z = (s.trace->draw(i) - dist.mean(i)) / sigma;
        og(i) = -adv * (z / sigma) * policy.max_accel() * inv_b;
        dls += -adv * (z * z - 1.0);
      }
      bool clamped = dist.raw_log_std(i) < kMinLogStd || dist.raw_log_std(i) > kMaxLogStd;
      og(dim + i) = clamped ? 0.0 : dls * inv_b;
    }
    pg.Accumulate(policy.net().Backward(pcache, og));

    Eigen::VectorXd vg(1);
    vg(0) = 2.0 * (value - s.ret) * inv_b;
    cg.Accumulate(critic.net().Backward(ccache, vg));

    stats.mean_return += s.ret * inv_b;
    stats.entropy += GaussianPolicy::Entropy(dist) * inv_b;
    stats.critic_loss += (value - s.ret) * (value - s.ret) * inv_b;
  }
  state.policy_adam.learning_rate = cfg.policy_learning_rate;
  state.critic_adam.learning_rate = cfg.critic_learning_rate;
  AdamStep(policy.mutable_net(), pg, state.policy_adam);
  AdamStep(critic.mutable_net(), cg, state.critic_adam);
  return stats;
}

double CriticRegressionStep(Critic& critic, std::span<const Eigen::VectorXd> features,
                            std::span<const double> returns, AdamState& adam) {
  if (features.empty()) throw Error(ErrorKind::kEmptyBatch, "no regression samples");
  if (features.size() != returns.size()) {
    throw Error(ErrorKind::kLengthMismatch, "features and returns differ in length");
  }
  const double inv_b = 1.0 / static_cast<double>(features.size());
  MlpGradients g = critic.net().ZeroGradients();
  MlpCache cache;
  double mse = 0.0;
  for (size_t i = 0; i < features.size(); ++i) {
    double v = critic.Value(features[i], &cache);
    mse += (v - returns[i]) * (v - returns[i]) * inv_b;
    Eigen::VectorXd og(1);
    og(0) = 2.0 * (v - returns[i]) * inv_b;
    g.Accumulate(critic.net().Backward(cache, og));
  }
  AdamStep(critic.mutable_net(), g, adam);
  return mse;
}

Vec3 ModelFreeAct(const GaussianPolicy& policy, const std::optional<ObservationWindow>& window,
                  const AgentState& agent) {
  if (!window || !FullyVisible(*window)) return {};
  GaussianPolicy::Distribution dist = policy.Evaluate(ModelFreeFeatures(*window, agent));
  const double m = policy.max_accel();
  return {std::clamp(dist.mean(0), -m, m), std::clamp(dist.mean(1), -m, m),
          std::clamp(dist.mean(2), -m, m)};
}

}  // namespace dronecatch
