#include "dronecatch/forecaster.h"

#include <algorithm>
#include <numbers>
#include <numeric>

#include "dronecatch/error.h"

namespace dronecatch {
namespace {

constexpr double kPositionScale = 1.0 / 3.0;
constexpr double kVelocityScale = 1.0 / 10.0;
constexpr double kAccelScale = 1.0 / 25.0;

constexpr const char* kEstimatorFormat = "dronecatch-estimator";

void PutVec(Eigen::VectorXd& x, int at, const Vec3& v, double scale) {
  x(at) = v.x * scale;
  x(at + 1) = v.y * scale;
  x(at + 2) = v.z * scale;
}

Vec3 GetVec(const Eigen::VectorXd& x, int at) { return {x(at), x(at + 1), x(at + 2)}; }

}  // namespace

Forecast NmeRollout(const ObjectState& state, int horizon, double dt) {
  if (horizon < 1 || !(dt > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "rollout needs horizon >= 1 and dt > 0");
  }
  Forecast f;
  f.source_state = state;
  f.positions.reserve(horizon);
  Vec3 o = state.o;
  Vec3 v = state.v;
  for (int k = 0; k < horizon; ++k) {
    o = o + v * dt;
    v = v + state.a * dt;
    f.positions.push_back(o);
  }
  return f;
}

Forecast MeForecastFull(const ObjectState& initial, int total_steps, double dt) {
  return NmeRollout(initial, total_steps, dt);
}

Forecast SliceForecast(const Forecast& full, int offset, int horizon) {
  if (full.positions.empty() || horizon < 1 || offset < 0) {
    throw Error(ErrorKind::kInvalidArgument, "cannot slice an empty forecast");
  }
  Forecast f;
  f.source_state = full.source_state;
  const int n = full.horizon();
  for (int k = 0; k < horizon; ++k) {
    f.positions.push_back(full.positions[std::min(offset + k, n - 1)]);
  }
  return f;
}

LearnedEstimator::LearnedEstimator(double dt)
    : net_(std::vector<int>{kInputSize, 64, 64, kOutputSize}), dt_(dt) {}

LearnedEstimator::LearnedEstimator(Mlp net, double dt) : net_(std::move(net)), dt_(dt) {
  if (net_.input_size() != kInputSize || net_.output_size() != kOutputSize) {
    throw Error(ErrorKind::kDimensionMismatch, "estimator network must map 20 -> 9");
  }
}

Eigen::VectorXd LearnedEstimator::Features(std::span<const Vec3, 3> positions,
                                           const AgentState& agent) {
  Eigen::VectorXd x(kInputSize);
  for (int i = 0; i < 3; ++i) PutVec(x, 3 * i, positions[i], kPositionScale);
  PutVec(x, 9, agent.d, kPositionScale);
  PutVec(x, 12, agent.v, kVelocityScale);
  PutVec(x, 15, agent.a, kAccelScale);
  x(18) = agent.phi / std::numbers::pi;
  x(19) = agent.theta / std::numbers::pi;
  return x;
}

Eigen::VectorXd LearnedEstimator::Features(const ObservationWindow& window,
                                           const AgentState& agent) {
  if (!FullyVisible(window)) {
    throw Error(ErrorKind::kInsufficientObservations, "window has missing observations");
  }
  std::array<Vec3, 3> p{*window[0].pos, *window[1].pos, *window[2].pos};
  return Features(std::span<const Vec3, 3>(p), agent);
}

ObjectState LearnedEstimator::Decode(const Eigen::VectorXd& out) const {
  ObjectState s;
  s.o = GetVec(out, 0);
  s.v = GetVec(out, 3) / dt_;
  s.a = GetVec(out, 6) / (dt_ * dt_);
  return s;
}

Eigen::VectorXd LearnedEstimator::Encode(const ObjectState& state) const {
  Eigen::VectorXd y(kOutputSize);
  PutVec(y, 0, state.o, 1.0);
  PutVec(y, 3, state.v, dt_);
  PutVec(y, 6, state.a, dt_ * dt_);
  return y;
}

ObjectState LearnedEstimator::Estimate(const ObservationWindow& window,
                                       const AgentState& agent) const {
  return Decode(net_.Forward(Features(window, agent)));
}

nlohmann::json LearnedEstimator::ToJson() const {
  return {{"format", kEstimatorFormat}, {"version", 1}, {"dt", dt_}, {"net", net_.ToJson()}};
}

LearnedEstimator LearnedEstimator::FromJson(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kEstimatorFormat) {
      throw Error(ErrorKind::kParse, "not an estimator checkpoint");
    }
    return LearnedEstimator(Mlp::FromJson(j.at("net")), j.at("dt").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("estimator checkpoint: ") + e.what());
  }
}

std::vector<EstimatorExample> MakeEstimatorExamples(std::span<const std::vector<Vec3>> tracks,
                                                    double dt, double sigma_obs, Rng& rng) {
  std::normal_distribution<double> noise(0.0, sigma_obs > 0.0 ? sigma_obs : 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto jitter = [&](const Vec3& p) {
    if (sigma_obs <= 0.0) return p;
    return Vec3{p.x + noise(rng), p.y + noise(rng), p.z + noise(rng)};
  };
  std::vector<EstimatorExample> out;
  for (const std::vector<Vec3>& track : tracks) {
    for (size_t t = 2; t + 2 < track.size(); ++t) {
      EstimatorExample ex;
      ex.window = {jitter(track[t - 2]), jitter(track[t - 1]), jitter(track[t])};
      ex.agent.d = {3.0 * unit(rng), 1.0 * unit(rng), 3.0 * unit(rng)};
      ex.agent.v = {5.0 * unit(rng), 5.0 * unit(rng), 5.0 * unit(rng)};
      ex.agent.a = {25.0 * unit(rng), 25.0 * unit(rng), 25.0 * unit(rng)};
      ex.agent.phi = 0.5 * std::numbers::pi * unit(rng);
      ex.agent.theta = std::numbers::pi * unit(rng);
      ex.target.o = track[t];
      ex.target.v = (track[t + 1] - track[t]) / dt;
      ex.target.a = (track[t + 2] - track[t + 1] * 2.0 + track[t]) / (dt * dt);
      out.push_back(ex);
    }
  }
  return out;
}

double EstimatorLoss(const LearnedEstimator& est, std::span<const EstimatorExample> examples) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const EstimatorExample& ex : examples) {
    Eigen::VectorXd pred = est.net().Forward(
        LearnedEstimator::Features(std::span<const Vec3, 3>(ex.window), ex.agent));
    total += (pred - est.Encode(ex.target)).cwiseAbs().sum();
  }
  return total / (LearnedEstimator::kOutputSize * static_cast<double>(examples.size()));
}

LearnedEstimator TrainEstimator(std::span<const EstimatorExample> examples,
                                const EstimatorTrainConfig& cfg, double dt,
                                TrainCurve* curve) {
  if (examples.empty()) {
    throw Error(ErrorKind::kEmptyTrainingSet, "no estimator training examples");
  }
  if (cfg.epochs < 1 || cfg.batch_size < 1) {
    throw Error(ErrorKind::kInvalidArgument, "epochs and batch size must be positive");
  }
  Rng rng(DeriveSeed(cfg.seed, 11));
  std::vector<int> sizes{LearnedEstimator::kInputSize};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(LearnedEstimator::kOutputSize);
  LearnedEstimator est(Mlp::Random(sizes, rng, 0.1), dt);

  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> targets;
  inputs.reserve(examples.size());
  targets.reserve(examples.size());
  for (const EstimatorExample& ex : examples) {
    inputs.push_back(LearnedEstimator::Features(std::span<const Vec3, 3>(ex.window), ex.agent));
    targets.push_back(est.Encode(ex.target));
  }

  AdamState adam;
  adam.learning_rate = cfg.learning_rate;
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  MlpCache cache;
  const double per_output = 1.0 / LearnedEstimator::kOutputSize;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      MlpGradients grads = est.net().ZeroGradients();
      double batch_total = 0.0;
      for (size_t i = start; i < end; ++i) {
        size_t idx = order[i];
        Eigen::VectorXd pred = est.net().Forward(inputs[idx], &cache);
        Eigen::VectorXd diff = pred - targets[idx];
        batch_total += diff.cwiseAbs().sum() * per_output;
        Eigen::VectorXd g = diff.unaryExpr([](double d) {
          return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        }) * (per_output * inv_batch);
        grads.Accumulate(est.net().Backward(cache, g));
      }
      AdamStep(est.mutable_net(), grads, adam);
      double batch_loss = batch_total * inv_batch;
      epoch_total += batch_total;
      if (curve != nullptr) curve->batch_loss.push_back(batch_loss);
    }
    if (curve != nullptr) {
      curve->epoch_loss.push_back(epoch_total / static_cast<double>(order.size()));
    }
  }
  return est;
}

}  // namespace dronecatch
