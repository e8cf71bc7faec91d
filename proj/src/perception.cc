#include "dronecatch/perception.h"

#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "dronecatch/error.h"

namespace dronecatch {

std::optional<ObservationWindow> LatestWindow(std::span<const Observation> history) {
  if (history.size() < 3) return std::nullopt;
  size_t n = history.size();
  return ObservationWindow{history[n - 3], history[n - 2], history[n - 1]};
}

bool FullyVisible(const ObservationWindow& window) {
  return window[0].visible() && window[1].visible() && window[2].visible();
}

Observation Observe(const AgentState& agent, const Vec3& object_pos,
                    const ObservationModel& model, Rng& rng, int t,
                    const Vec3& frame_origin) {
  Observation obs;
  obs.t = t;
  Vec3 ray = object_pos - agent.d;
  double len = Norm(ray);
  if (len > 0.0) {
    double cos_angle = Dot(ray, CameraAxis(agent.phi, agent.theta)) / len;
    double half_fov = 0.5 * model.fov_deg * std::numbers::pi / 180.0;
    if (cos_angle < std::cos(half_fov)) return obs;
  }
  Vec3 pos = object_pos - frame_origin;
  if (model.sigma_obs > 0.0) {
    std::normal_distribution<double> noise(0.0, model.sigma_obs);
    pos.x += noise(rng);
    pos.y += noise(rng);
    pos.z += noise(rng);
  }
  obs.pos = pos;
  return obs;
}

ObjectState FiniteDifferenceEstimate(const ObservationWindow& window, double dt) {
  if (!FullyVisible(window)) {
    throw Error(ErrorKind::kInsufficientObservations, "window has missing observations");
  }
  const Vec3& p0 = *window[0].pos;
  const Vec3& p1 = *window[1].pos;
  const Vec3& p2 = *window[2].pos;
  ObjectState s;
  s.o = p2;
  s.v = (p2 - p1) / dt;
  s.a = (p2 - p1 * 2.0 + p0) / (dt * dt);
  return s;
}

Vec3 CppEstimate(const ObservationWindow& window) {
  if (!window[2].visible()) {
    throw Error(ErrorKind::kInsufficientObservations, "latest observation missing");
  }
  return *window[2].pos;
}

KalmanState KalmanInit(std::span<const std::vector<Vec3>> tracks) {
  Vec3 sum;
  size_t count = 0;
  for (const auto& track : tracks) {
    for (size_t k = 1; k < track.size(); ++k) {
      sum += track[k] - track[k - 1];
      ++count;
    }
  }
  if (count == 0) {
    throw Error(ErrorKind::kEmptyTrainingSet, "no displacements in training tracks");
  }
  Vec3 mean = sum / static_cast<double>(count);
  Vec3 sq;
  for (const auto& track : tracks) {
    for (size_t k = 1; k < track.size(); ++k) {
      Vec3 dev = track[k] - track[k - 1] - mean;
      sq += Vec3{dev.x * dev.x, dev.y * dev.y, dev.z * dev.z};
    }
  }
  Vec3 var = sq / static_cast<double>(count);
  KalmanState state;
  state.transition_drift = mean;
  state.process_variance = {std::sqrt(var.x), std::sqrt(var.y), std::sqrt(var.z)};
  state.measurement_variance = 3e-2;
  return state;
}

KalmanState KalmanUpdate(const KalmanState& state, const Observation& obs) {
  KalmanState next = state;
  if (!next.initialized) {
    if (obs.visible()) {
      next.mean = *obs.pos;
      next.covariance = Eigen::Matrix3d::Identity() * next.measurement_variance;
      next.initialized = true;
    }
    return next;
  }
  // predict
  next.mean += next.transition_drift;
  for (int i = 0; i < 3; ++i) {
    next.covariance(i, i) += next.process_variance[i];
  }
  if (!obs.visible()) return next;

  // correct, H = I, R = r I (Joseph form keeps P symmetric PSD)
  const Eigen::Matrix3d r = Eigen::Matrix3d::Identity() * next.measurement_variance;
  const Eigen::Matrix3d s = next.covariance + r;
  const Eigen::Matrix3d gain = next.covariance * s.inverse();
  Eigen::Vector3d innovation(obs.pos->x - next.mean.x, obs.pos->y - next.mean.y,
                             obs.pos->z - next.mean.z);
  Eigen::Vector3d delta = gain * innovation;
  next.mean += Vec3{delta(0), delta(1), delta(2)};
  const Eigen::Matrix3d i_minus_k = Eigen::Matrix3d::Identity() - gain;
  Eigen::Matrix3d p = i_minus_k * next.covariance * i_minus_k.transpose() +
                      gain * r * gain.transpose();
  next.covariance = 0.5 * (p + p.transpose());
  return next;
}

}  // namespace dronecatch
