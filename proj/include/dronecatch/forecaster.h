#ifndef DRONECATCH_FORECASTER_H_
#define DRONECATCH_FORECASTER_H_

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dronecatch/agent.h"
#include "dronecatch/neural.h"
#include "dronecatch/perception.h"
#include "dronecatch/physics.h"
#include "dronecatch/rng.h"

namespace dronecatch {

struct Forecast {
  std::vector<Vec3> positions;  // o_{t+1}, ..., o_{t+H}
  ObjectState source_state;

  int horizon() const { return static_cast<int>(positions.size()); }
};

// Constant-acceleration rollout, o' = o + v dt, v' = v + a dt. No drag and no
// collisions.
Forecast NmeRollout(const ObjectState& state, int horizon, double dt);

// Whole-episode rollout from the first estimate; never refreshed.
Forecast MeForecastFull(const ObjectState& initial, int total_steps, double dt);

// positions[offset .. offset + horizon) of `full`, padded with its last
// position past the end.
Forecast SliceForecast(const Forecast& full, int offset, int horizon);

// Window + agent state -> (o, v, a). The network works in per-control-step
// units (m, m/step, m/step^2); Estimate() converts back to SI.
class LearnedEstimator {
 public:
  static constexpr int kInputSize = 9 + 11;
  static constexpr int kOutputSize = 9;

  LearnedEstimator(double dt = 0.02);
  LearnedEstimator(Mlp net, double dt);

  static Eigen::VectorXd Features(const ObservationWindow& window, const AgentState& agent);
  static Eigen::VectorXd Features(std::span<const Vec3, 3> positions, const AgentState& agent);

  // Throws kInsufficientObservations unless the window is fully visible.
  ObjectState Estimate(const ObservationWindow& window, const AgentState& agent) const;
  ObjectState Decode(const Eigen::VectorXd& output) const;
  Eigen::VectorXd Encode(const ObjectState& state) const;

  const Mlp& net() const { return net_; }
  Mlp& mutable_net() { return net_; }
  double dt() const { return dt_; }

  nlohmann::json ToJson() const;
  static LearnedEstimator FromJson(const nlohmann::json& j);

 private:
  Mlp net_;
  double dt_;
};

struct EstimatorExample {
  std::array<Vec3, 3> window;  // noisy positions t-2, t-1, t
  AgentState agent;
  ObjectState target;
};

// Supervised windows from control-step position tracks (start-frame
// coordinates). Targets use forward differences, v_t = (o_{t+1} - o_t)/dt and
// a_t = (o_{t+2} - 2 o_{t+1} + o_t)/dt^2, so the NME rollout of the target
// reproduces the next two positions. The agent state is randomized.
std::vector<EstimatorExample> MakeEstimatorExamples(std::span<const std::vector<Vec3>> tracks,
                                                    double dt, double sigma_obs, Rng& rng);

struct EstimatorTrainConfig {
  std::vector<int> hidden{64, 64};
  int epochs = 12;
  int batch_size = 64;
  double learning_rate = 1e-3;
  uint64_t seed = 1;
};

struct TrainCurve {
  std::vector<double> batch_loss;
  std::vector<double> epoch_loss;
};

// Mean |prediction - target| over the 9 network outputs.
double EstimatorLoss(const LearnedEstimator& est, std::span<const EstimatorExample> examples);

LearnedEstimator TrainEstimator(std::span<const EstimatorExample> examples,
                                const EstimatorTrainConfig& cfg, double dt,
                                TrainCurve* curve = nullptr);

}  // namespace dronecatch

#endif  // DRONECATCH_FORECASTER_H_
