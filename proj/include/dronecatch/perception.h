#ifndef DRONECATCH_PERCEPTION_H_
#define DRONECATCH_PERCEPTION_H_

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dronecatch/agent.h"
#include "dronecatch/physics.h"
#include "dronecatch/rng.h"

namespace dronecatch {

// Noisy object position in the agent start frame; empty when out of view.
struct Observation {
  int t = 0;
  std::optional<Vec3> pos;

  bool visible() const { return pos.has_value(); }
};

struct ObservationModel {
  double sigma_obs = 0.1;  // m, isotropic per component
  double fov_deg = 90.0;   // full cone angle
};

// Observations t-2, t-1, t (oldest first).
using ObservationWindow = std::array<Observation, 3>;

// Last three observations of `history`; nullopt if fewer than three exist.
std::optional<ObservationWindow> LatestWindow(std::span<const Observation> history);

bool FullyVisible(const ObservationWindow& window);

// Visible iff the agent->object ray is within fov/2 of the camera axis.
// Positions are reported relative to `frame_origin`.
Observation Observe(const AgentState& agent, const Vec3& object_pos,
                    const ObservationModel& model, Rng& rng, int t,
                    const Vec3& frame_origin = {});

// o = p_t, v = (p_t - p_{t-1})/dt, a = (p_t - 2 p_{t-1} + p_{t-2})/dt^2.
ObjectState FiniteDifferenceEstimate(const ObservationWindow& window, double dt);

// Current-position predictor: the latest observed position.
Vec3 CppEstimate(const ObservationWindow& window);

// Diagonal constant-drift Kalman filter over object position.
struct KalmanState {
  Vec3 mean;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  Vec3 transition_drift;      // mean per-step displacement
  // Per-axis std of the per-step displacement, used as the process variance
  // itself: Q = diag(process_variance).
  Vec3 process_variance;
  double measurement_variance = 3e-2;
  bool initialized = false;   // set by the first visible measurement
};

// Drift and process variance from per-control-step displacements of every
// training track. Throws kEmptyTrainingSet if no displacement exists.
KalmanState KalmanInit(std::span<const std::vector<Vec3>> tracks);

// Predict (mean += drift, P += Q) then correct if `obs` is visible. The first
// visible observation initializes the mean with covariance R I.
KalmanState KalmanUpdate(const KalmanState& state, const Observation& obs);

}  // namespace dronecatch

#endif  // DRONECATCH_PERCEPTION_H_
