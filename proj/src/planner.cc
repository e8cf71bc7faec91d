#include "dronecatch/planner.h"

#include <algorithm>
#include <limits>
#include <thread>

#include "dronecatch/error.h"

namespace dronecatch {
namespace {

struct Best {
  double score = std::numeric_limits<double>::infinity();
  int index = -1;
};

// Lexicographic (score, index) minimum; associative and commutative.
Best Better(const Best& a, const Best& b) {
  if (b.index < 0) return a;
  if (a.index < 0) return b;
  if (b.score < a.score || (b.score == a.score && b.index < a.index)) return b;
  return a;
}

Vec3 Clamp(const double* a, double max_accel) {
  return {std::clamp(a[0], -max_accel, max_accel), std::clamp(a[1], -max_accel, max_accel),
          std::clamp(a[2], -max_accel, max_accel)};
}

Best ScoreRange(const AgentState& agent, const Forecast& forecast, const DroneSpec& drone,
                double dt, const ActionSampler& sampler, uint64_t seed, int horizon,
                int begin, int end) {
  std::vector<double> buf(3 * horizon);
  Best best;
  for (int i = begin; i < end; ++i) {
    sampler.Candidate(seed, i, horizon, buf.data());
    Vec3 d = agent.d;
    Vec3 v = agent.v;
    double score = 0.0;
    for (int k = 0; k < horizon; ++k) {
      AdvanceKinematics(d, v, Clamp(&buf[3 * k], drone.max_accel), drone.max_velocity, dt);
      score += Distance(d, forecast.positions[k]);
    }
    best = Better(best, {score, i});
  }
  return best;
}

}  // namespace

const char* SamplerKindName(SamplerKind kind) {
  return kind == SamplerKind::kUniform ? "uniform" : "policy";
}

SamplerKind ParseSamplerKind(const std::string& name) {
  if (name == "uniform") return SamplerKind::kUniform;
  if (name == "policy") return SamplerKind::kPolicy;
  throw Error(ErrorKind::kInvalidArgument, "unknown sampler '" + name + "'");
}

const char* ForecastModeName(ForecastMode mode) {
  switch (mode) {
    case ForecastMode::kRefreshed: return "refreshed";
    case ForecastMode::kMeOnly: return "me_only";
    case ForecastMode::kCppStatic: return "cpp_static";
    case ForecastMode::kKalmanStatic: return "kalman_static";
    case ForecastMode::kOracle: return "oracle";
  }
  return "?";
}

ForecastMode ParseForecastMode(const std::string& name) {
  for (ForecastMode m : {ForecastMode::kRefreshed, ForecastMode::kMeOnly, ForecastMode::kCppStatic,
                         ForecastMode::kKalmanStatic, ForecastMode::kOracle}) {
    if (name == ForecastModeName(m)) return m;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown forecast mode '" + name + "'");
}

void PlannerConfig::Validate() const {
  if (n_samples < 1 || horizon < 1 || threads < 1) {
    throw Error(ErrorKind::kInvalidArgument, "planner needs n_samples, horizon, threads >= 1");
  }
}

void UniformSampler::Candidate(uint64_t seed, int index, int horizon, double* out) const {
  StreamRng rng(DeriveSeed(seed, static_cast<uint64_t>(index)));
  for (int j = 0; j < 3 * horizon; ++j) out[j] = rng.Uniform(-max_accel_, max_accel_);
}

EnumeratingSampler::EnumeratingSampler(std::vector<ActionSequence> candidates)
    : candidates_(std::move(candidates)) {}

void EnumeratingSampler::Candidate(uint64_t, int index, int horizon, double* out) const {
  if (index < 0 || index >= capacity()) {
    throw Error(ErrorKind::kInvalidArgument, "candidate index beyond the enumerated set");
  }
  const ActionSequence& seq = candidates_[index];
  if (static_cast<int>(seq.size()) != horizon) {
    throw Error(ErrorKind::kLengthMismatch, "enumerated sequence length differs from horizon");
  }
  for (int k = 0; k < horizon; ++k) {
    out[3 * k] = seq[k].x;
    out[3 * k + 1] = seq[k].y;
    out[3 * k + 2] = seq[k].z;
  }
}

std::vector<ActionSequence> EnumerateSequences(std::span<const Vec3> levels, int horizon) {
  std::vector<ActionSequence> out{ActionSequence{}};
  for (int k = 0; k < horizon; ++k) {
    std::vector<ActionSequence> next;
    next.reserve(out.size() * levels.size());
    for (const ActionSequence& prefix : out) {
      for (const Vec3& a : levels) {
        ActionSequence s = prefix;
        s.push_back(a);
        next.push_back(std::move(s));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<Vec3> RolloutAgent(const AgentState& agent, std::span<const Vec3> seq,
                               const DroneSpec& drone, double dt) {
  std::vector<Vec3> path;
  path.reserve(seq.size());
  Vec3 d = agent.d;
  Vec3 v = agent.v;
  for (const Vec3& a : seq) {
    double raw[3] = {a.x, a.y, a.z};
    AdvanceKinematics(d, v, Clamp(raw, drone.max_accel), drone.max_velocity, dt);
    path.push_back(d);
  }
  return path;
}

double ScoreSequence(std::span<const Vec3> path, const Forecast& forecast) {
  if (path.size() != forecast.positions.size()) {
    throw Error(ErrorKind::kLengthMismatch, "agent path and forecast lengths differ");
  }
  double score = 0.0;
  for (size_t k = 0; k < path.size(); ++k) score += Distance(path[k], forecast.positions[k]);
  return score;
}

PlanResult PlanMpcSeeded(const AgentState& agent, const Forecast& forecast,
                         const PlannerConfig& cfg, const DroneSpec& drone, double dt,
                         const ActionSampler& sampler, uint64_t seed) {
  cfg.Validate();
  const int horizon = cfg.horizon;
  if (forecast.horizon() != horizon) {
    throw Error(ErrorKind::kLengthMismatch, "forecast horizon differs from planner horizon");
  }
  const int n = cfg.n_samples;
  if (sampler.capacity() >= 0 && n > sampler.capacity()) {
    throw Error(ErrorKind::kInvalidArgument, "sampler cannot supply n_samples candidates");
  }

  Best best;
  const int workers = std::min(cfg.threads, n);
  if (workers <= 1) {
    best = ScoreRange(agent, forecast, drone, dt, sampler, seed, horizon, 0, n);
  } else {
    std::vector<Best> partial(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      int begin = static_cast<int>(static_cast<int64_t>(n) * w / workers);
      int end = static_cast<int>(static_cast<int64_t>(n) * (w + 1) / workers);
      pool.emplace_back([&, w, begin, end] {
        partial[w] = ScoreRange(agent, forecast, drone, dt, sampler, seed, horizon, begin, end);
      });
    }
    for (std::thread& t : pool) t.join();
    for (const Best& b : partial) best = Better(best, b);
  }

  PlanResult result;
  result.best_index = best.index;
  std::vector<double> buf(3 * horizon);
  sampler.Candidate(seed, best.index, horizon, buf.data());
  for (int k = 0; k < horizon; ++k) {
    result.best_sequence.push_back(Clamp(&buf[3 * k], drone.max_accel));
  }
  result.best_action = result.best_sequence.front();
  result.predicted_agent_path = RolloutAgent(agent, result.best_sequence, drone, dt);
  result.best_score = ScoreSequence(result.predicted_agent_path, forecast);
  return result;
}

PlanResult PlanMpc(const AgentState& agent, const Forecast& forecast, const PlannerConfig& cfg,
                   const DroneSpec& drone, double dt, const ActionSampler& sampler, Rng& rng) {
  return PlanMpcSeeded(agent, forecast, cfg, drone, dt, sampler, rng());
}

Forecast StaticTargetForecast(const Vec3& target, int horizon) {
  if (horizon < 1) throw Error(ErrorKind::kInvalidArgument, "horizon must be >= 1");
  Forecast f;
  f.source_state.o = target;
  f.positions.assign(horizon, target);
  return f;
}

}  // namespace dronecatch
