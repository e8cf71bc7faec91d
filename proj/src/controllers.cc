#include "dronecatch/controllers.h"

#include <algorithm>

#include "dronecatch/error.h"

namespace dronecatch {
namespace {

std::optional<Vec3> LatestVisible(std::span<const Observation> observations) {
  for (size_t i = observations.size(); i-- > 0;) {
    if (observations[i].visible()) return *observations[i].pos;
  }
  return std::nullopt;
}

ObjectState Coast(const ObjectState& s, double dt) {
  ObjectState next = s;
  next.o = s.o + s.v * dt;
  next.v = s.v + s.a * dt;
  return next;
}

Vec3 ClampAccel(const Vec3& a, double max_accel) {
  return {std::clamp(a.x, -max_accel, max_accel), std::clamp(a.y, -max_accel, max_accel),
          std::clamp(a.z, -max_accel, max_accel)};
}

std::optional<CameraOrientation> PointCamera(const Vec3& target, const Vec3& agent_next) {
  Vec3 p = target - agent_next;
  if (p.x == 0.0 && p.y == 0.0 && p.z == 0.0) return std::nullopt;
  return CameraAngles(target, agent_next);
}

}  // namespace

const char* MethodName(Method method) {
  switch (method) {
    case Method::kFull: return "full";
    case Method::kUniformAs: return "uniform-AS";
    case Method::kMe: return "ME";
    case Method::kCpp: return "CPP";
    case Method::kCppKalman: return "CPP+Kalman";
    case Method::kModelFree: return "model-free";
    case Method::kOracle: return "oracle";
  }
  return "?";
}

Method ParseMethod(const std::string& name) {
  for (Method m : AllMethods()) {
    if (name == MethodName(m)) return m;
  }
  if (name == "uniform" || name == "uniform-as") return Method::kUniformAs;
  if (name == "me") return Method::kMe;
  if (name == "cpp") return Method::kCpp;
  if (name == "cpp+kalman" || name == "kalman") return Method::kCppKalman;
  if (name == "oracle-upper-bound") return Method::kOracle;
  throw Error(ErrorKind::kInvalidArgument, "unknown method '" + name + "'");
}

std::vector<Method> AllMethods() {
  return {Method::kOracle, Method::kFull,      Method::kUniformAs, Method::kCppKalman,
          Method::kCpp,    Method::kMe,        Method::kModelFree};
}

PlannerConfig MethodPlannerConfig(Method method, int n_samples, int horizon) {
  PlannerConfig cfg;
  cfg.n_samples = n_samples;
  cfg.horizon = horizon;
  cfg.sampler = method == Method::kFull ? SamplerKind::kPolicy : SamplerKind::kUniform;
  switch (method) {
    case Method::kMe: cfg.forecast_mode = ForecastMode::kMeOnly; break;
    case Method::kCpp: cfg.forecast_mode = ForecastMode::kCppStatic; break;
    case Method::kCppKalman: cfg.forecast_mode = ForecastMode::kKalmanStatic; break;
    case Method::kOracle: cfg.forecast_mode = ForecastMode::kOracle; break;
    default: cfg.forecast_mode = ForecastMode::kRefreshed; break;
  }
  return cfg;
}

bool MethodNeedsPolicy(Method method) {
  return method == Method::kFull || method == Method::kModelFree;
}

bool MethodNeedsEstimator(Method method) {
  return method == Method::kFull || method == Method::kUniformAs || method == Method::kMe;
}

MethodController::MethodController(Method method, PlannerConfig planner, Models models,
                                   bool explore)
    : method_(method), planner_(planner), models_(models), explore_(explore) {
  planner_.Validate();
  if (method_ == Method::kModelFree && models_.model_free == nullptr) {
    throw Error(ErrorKind::kMissingCheckpoint, "model-free method needs a policy");
  }
  if (planner_.sampler == SamplerKind::kPolicy && models_.policy == nullptr) {
    throw Error(ErrorKind::kMissingCheckpoint, "policy sampler needs a trained policy");
  }
  if (planner_.forecast_mode == ForecastMode::kKalmanStatic && models_.kalman == nullptr) {
    throw Error(ErrorKind::kMissingCheckpoint, "Kalman forecasting needs a fitted prototype");
  }
}

void MethodController::Reset(const EpisodeContext& ctx) {
  ctx_ = ctx;
  last_estimate_.reset();
  me_forecast_.reset();
  me_start_ = 0;
  kalman_ = models_.kalman != nullptr ? *models_.kalman : KalmanState{};
}

std::optional<ObjectState> MethodController::EstimateState(const ControlInput& input) {
  const double dt = ctx_.cfg->sim.control_dt;
  const int k = input.step;
  switch (planner_.forecast_mode) {
    case ForecastMode::kOracle: {
      const std::vector<Vec3>& ref = ctx_.reference;
      const int last = static_cast<int>(ref.size()) - 1;
      auto at = [&](int i) { return ref[std::min(i, last)]; };
      ObjectState s;
      s.o = at(k);
      s.v = (at(k + 1) - at(k)) / dt;
      s.a = (at(k + 2) - at(k + 1) * 2.0 + at(k)) / (dt * dt);
      return s;
    }
    case ForecastMode::kCppStatic: {
      std::optional<Vec3> p = LatestVisible(input.observations);
      if (!p) return std::nullopt;
      ObjectState s;
      s.o = *p;
      return s;
    }
    case ForecastMode::kKalmanStatic: {
      kalman_ = KalmanUpdate(kalman_, input.observations.back());
      if (!kalman_.initialized) return std::nullopt;
      ObjectState s;
      s.o = kalman_.mean;
      return s;
    }
    case ForecastMode::kRefreshed:
    case ForecastMode::kMeOnly:
      break;
  }
  std::optional<ObservationWindow> window = LatestWindow(input.observations);
  std::optional<ObjectState> est;
  if (window && FullyVisible(*window)) {
    est = models_.estimator != nullptr ? models_.estimator->Estimate(*window, input.agent)
                                       : FiniteDifferenceEstimate(*window, dt);
  } else if (last_estimate_) {
    est = Coast(*last_estimate_, dt);
  } else if (std::optional<Vec3> p = LatestVisible(input.observations)) {
    est = ObjectState{};
    est->o = *p;
  }
  last_estimate_ = est;
  return est;
}

Forecast MethodController::BuildForecast(const ControlInput& input,
                                         const std::optional<ObjectState>& est) {
  const double dt = ctx_.cfg->sim.control_dt;
  const int h = planner_.horizon;
  const int k = input.step;
  switch (planner_.forecast_mode) {
    case ForecastMode::kOracle: {
      const std::vector<Vec3>& ref = ctx_.reference;
      const int last = static_cast<int>(ref.size()) - 1;
      Forecast f;
      f.source_state = *est;
      for (int i = 1; i <= h; ++i) f.positions.push_back(ref[std::min(k + i, last)]);
      return f;
    }
    case ForecastMode::kCppStatic:
    case ForecastMode::kKalmanStatic:
      return StaticTargetForecast(est->o, h);
    case ForecastMode::kMeOnly: {
      if (!me_forecast_) {
        std::optional<ObservationWindow> window = LatestWindow(input.observations);
        if (window && FullyVisible(*window)) {
          me_forecast_ = MeForecastFull(*est, ctx_.cfg->max_control_steps, dt);
          me_start_ = k;
        }
      }
      if (me_forecast_) return SliceForecast(*me_forecast_, k - me_start_, h);
      return NmeRollout(*est, h, dt);
    }
    case ForecastMode::kRefreshed:
      break;
  }
  return NmeRollout(*est, h, dt);
}

Command MethodController::ActModelFree(const ControlInput& input) {
  Command cmd;
  std::optional<ObservationWindow> window = LatestWindow(input.observations);
  if (!window || !FullyVisible(*window)) return cmd;
  const GaussianPolicy& policy = *models_.model_free;
  const DroneSpec& drone = ctx_.cfg->drone;
  Eigen::VectorXd features = ModelFreeFeatures(*window, input.agent);
  GaussianPolicy::Distribution dist = policy.Evaluate(features);
  Vec3 mean{dist.mean(0), dist.mean(1), dist.mean(2)};
  if (explore_) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd draw(3);
    for (int i = 0; i < 3; ++i) draw(i) = dist.mean(i) + std::exp(dist.log_std(i)) * normal(*ctx_.rng);
    cmd.accel = ClampAccel({draw(0), draw(1), draw(2)}, drone.max_accel);
    cmd.trace = PolicyTrace{features, draw};
  } else {
    cmd.accel = ClampAccel(mean, drone.max_accel);
  }
  Vec3 next = input.agent.d + input.agent.v * ctx_.cfg->sim.control_dt;
  cmd.camera = PointCamera(*(*window)[2].pos, next);
  return cmd;
}

Command MethodController::Act(const ControlInput& input) {
  if (method_ == Method::kModelFree) return ActModelFree(input);
  const double dt = ctx_.cfg->sim.control_dt;
  const DroneSpec& drone = ctx_.cfg->drone;

  std::optional<ObjectState> est = EstimateState(input);
  Command cmd;
  if (!est) return cmd;  // nothing seen yet
  Forecast forecast = BuildForecast(input, est);
  const uint64_t seed = (*ctx_.rng)();

  PlanResult plan;
  if (planner_.sampler == SamplerKind::kPolicy) {
    Eigen::VectorXd features = PolicyFeatures(input.agent, forecast, *est);
    PolicySampler sampler(models_.policy->Evaluate(features), drone.max_accel);
    plan = PlanMpcSeeded(input.agent, forecast, planner_, drone, dt, sampler, seed);
    cmd.trace = PolicyTrace{features, sampler.RawCandidate(seed, plan.best_index)};
  } else {
    UniformSampler sampler(drone.max_accel);
    plan = PlanMpcSeeded(input.agent, forecast, planner_, drone, dt, sampler, seed);
  }
  cmd.accel = plan.best_action;
  if (planner_.forecast_mode != ForecastMode::kMeOnly || me_start_ == input.step) {
    cmd.estimate = est;
  }
  cmd.camera = PointCamera(forecast.positions.front(), plan.predicted_agent_path.front());
  cmd.forecast = std::move(forecast.positions);
  return cmd;
}

PolicyTrainResult TrainPolicy(std::span<const EpisodeConfig> episodes, std::span<const bool> easy,
                              const Models& models, const PolicyTrainConfig& cfg,
                              bool model_free,
                              const std::function<void(const TrainPoint&)>& progress) {
  if (episodes.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "no training episodes");
  if (easy.size() != episodes.size()) {
    throw Error(ErrorKind::kLengthMismatch, "difficulty flags do not match episodes");
  }
  if (cfg.batch_episodes < 1 || cfg.episodes < 1) {
    throw Error(ErrorKind::kInvalidArgument, "episodes and batch size must be positive");
  }
  cfg.reward.Validate();
  Rng rng(DeriveSeed(cfg.seed, 21));
  const int input_dim = model_free ? kModelFreeInputSize : PolicyInputSize(cfg.horizon);
  const int action_dim = model_free ? 3 : 3 * cfg.horizon;
  const double max_accel = episodes.front().drone.max_accel;

  PolicyTrainResult result;
  result.policy = GaussianPolicy::Create(input_dim, action_dim, cfg.hidden, max_accel, rng);
  result.critic = Critic::Create(input_dim + 1, cfg.hidden, rng);

  std::vector<size_t> easy_idx;
  for (size_t i = 0; i < easy.size(); ++i) {
    if (easy[i]) easy_idx.push_back(i);
  }
  const int easy_until = static_cast<int>(cfg.easy_fraction * cfg.episodes);

  Models m = models;
  if (model_free) {
    m.model_free = &result.policy;
  } else {
    m.policy = &result.policy;
  }
  const Method method = model_free ? Method::kModelFree : Method::kFull;
  PlannerConfig planner = MethodPlannerConfig(method, cfg.n_samples, cfg.horizon);

  ActorCriticState state;
  bool critic_primed = false;
  std::vector<EpisodeRecord> batch;
  for (int seen = 0; seen < cfg.episodes;) {
    batch.clear();
    const int n = std::min(cfg.batch_episodes, cfg.episodes - seen);
    for (int b = 0; b < n; ++b) {
      const bool curriculum = seen + b < easy_until && !easy_idx.empty();
      size_t idx = curriculum
                       ? easy_idx[std::uniform_int_distribution<size_t>(0, easy_idx.size() - 1)(rng)]
                       : std::uniform_int_distribution<size_t>(0, episodes.size() - 1)(rng);
      MethodController controller(method, planner, m, /*explore=*/true);
      batch.push_back(RunEpisode(episodes[idx], controller, DeriveSeed(cfg.seed, seen + b),
                                 cfg.reward));
    }
    seen += n;
    TrainPoint point;
    point.episode = seen;
    for (const EpisodeRecord& r : batch) point.success += r.outcome == Outcome::kCaught;
    point.success /= static_cast<double>(n);
    bool traced = std::any_of(batch.begin(), batch.end(), [](const EpisodeRecord& r) {
      return std::any_of(r.steps.begin(), r.steps.end(),
                         [](const StepLog& s) { return s.trace.has_value(); });
    });
    if (traced && !critic_primed) {
      // Start the baseline at the first batch's mean return instead of 0.
      double sum = 0.0;
      int count = 0;
      for (const EpisodeRecord& r : batch) {
        std::vector<double> g = ComputeReturns(r, cfg.reward);
        for (size_t t = 0; t < r.steps.size(); ++t) {
          if (r.steps[t].trace) {
            sum += g[t];
            ++count;
          }
        }
      }
      result.critic.mutable_net().mutable_bias(result.critic.net().num_layers() - 1)(0) =
          sum / count;
      critic_primed = true;
    }
    if (traced) {
      ActorCriticStats stats = ActorCriticUpdate(result.policy, result.critic, batch, cfg.reward,
                                                 cfg.actor_critic, state);
      point.mean_return = stats.mean_return;
      point.entropy = stats.entropy;
      point.critic_loss = stats.critic_loss;
    }
    result.curve.push_back(point);
    if (progress) progress(point);
  }
  return result;
}

}  // namespace dronecatch
