#ifndef DRONECATCH_PLANNER_H_
#define DRONECATCH_PLANNER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dronecatch/agent.h"
#include "dronecatch/forecaster.h"

namespace dronecatch {

using ActionSequence = std::vector<Vec3>;

enum class SamplerKind { kUniform, kPolicy };
enum class ForecastMode { kRefreshed, kMeOnly, kCppStatic, kKalmanStatic, kOracle };

const char* SamplerKindName(SamplerKind kind);
SamplerKind ParseSamplerKind(const std::string& name);
const char* ForecastModeName(ForecastMode mode);
ForecastMode ParseForecastMode(const std::string& name);

struct PlannerConfig {
  int n_samples = 1000;
  int horizon = 3;
  SamplerKind sampler = SamplerKind::kUniform;
  ForecastMode forecast_mode = ForecastMode::kRefreshed;
  int threads = 1;  // candidate scoring workers; the result does not depend on it

  void Validate() const;
};

struct PlanResult {
  Vec3 best_action;
  double best_score = 0.0;
  int best_index = 0;
  std::vector<Vec3> predicted_agent_path;
  ActionSequence best_sequence;
};

// Source of candidate sequences. Candidate `index` must depend only on
// (seed, index) so the set is independent of evaluation order and a run with
// N candidates is a prefix of any run with more.
class ActionSampler {
 public:
  virtual ~ActionSampler() = default;
  // Writes horizon accelerations (3 * horizon doubles) into `out`.
  virtual void Candidate(uint64_t seed, int index, int horizon, double* out) const = 0;
  // Upper bound on the number of distinct candidates, or -1 if unbounded.
  virtual int capacity() const { return -1; }
};

// Every component uniform on [-max_accel, max_accel].
class UniformSampler : public ActionSampler {
 public:
  explicit UniformSampler(double max_accel) : max_accel_(max_accel) {}
  void Candidate(uint64_t seed, int index, int horizon, double* out) const override;

 private:
  double max_accel_;
};

// Replays a fixed candidate list; used for exhaustive checks.
class EnumeratingSampler : public ActionSampler {
 public:
  explicit EnumeratingSampler(std::vector<ActionSequence> candidates);
  void Candidate(uint64_t seed, int index, int horizon, double* out) const override;
  int capacity() const override { return static_cast<int>(candidates_.size()); }

 private:
  std::vector<ActionSequence> candidates_;
};

// All sequences over the per-step action set `levels` (|levels|^horizon).
std::vector<ActionSequence> EnumerateSequences(std::span<const Vec3> levels, int horizon);

// Noise-free predicted positions d_{t+1..t+H}: actions are clamped to
// +-max_accel and integrated exactly as StepAgent does.
std::vector<Vec3> RolloutAgent(const AgentState& agent, std::span<const Vec3> seq,
                               const DroneSpec& drone, double dt);

// Sum of Euclidean distances. Throws kLengthMismatch.
double ScoreSequence(std::span<const Vec3> path, const Forecast& forecast);

// Scores n_samples candidates and returns the argmin (lowest index on ties).
// The candidate stream seed is drawn from `rng`.
PlanResult PlanMpc(const AgentState& agent, const Forecast& forecast, const PlannerConfig& cfg,
                   const DroneSpec& drone, double dt, const ActionSampler& sampler, Rng& rng);

// Same, with an explicit candidate seed.
PlanResult PlanMpcSeeded(const AgentState& agent, const Forecast& forecast,
                         const PlannerConfig& cfg, const DroneSpec& drone, double dt,
                         const ActionSampler& sampler, uint64_t seed);

// H copies of a fixed target with a zero-velocity source state.
Forecast StaticTargetForecast(const Vec3& target, int horizon);

}  // namespace dronecatch

#endif  // DRONECATCH_PLANNER_H_
