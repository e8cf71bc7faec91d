#ifndef DRONECATCH_CONTROLLERS_H_
#define DRONECATCH_CONTROLLERS_H_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dronecatch/environment.h"
#include "dronecatch/forecaster.h"
#include "dronecatch/perception.h"
#include "dronecatch/planner.h"
#include "dronecatch/sampler.h"

namespace dronecatch {

enum class Method { kFull, kUniformAs, kMe, kCpp, kCppKalman, kModelFree, kOracle };

const char* MethodName(Method method);
Method ParseMethod(const std::string& name);
std::vector<Method> AllMethods();

// Planner configuration a method implies for a given N and H.
PlannerConfig MethodPlannerConfig(Method method, int n_samples, int horizon);
bool MethodNeedsPolicy(Method method);
bool MethodNeedsEstimator(Method method);

// Shared read-only models. Pointers may be null when a method does not need
// them; a refreshed forecaster without a learned estimator falls back to
// finite differences.
struct Models {
  const LearnedEstimator* estimator = nullptr;
  const KalmanState* kalman = nullptr;
  const GaussianPolicy* policy = nullptr;
  const GaussianPolicy* model_free = nullptr;
};

// Forecast + MPC controller, or the model-free policy, configured per method.
// With `explore` the model-free policy samples its action instead of taking
// the mean; planner methods are stochastic through their sampler already.
class MethodController : public Controller {
 public:
  MethodController(Method method, PlannerConfig planner, Models models, bool explore = false);

  void Reset(const EpisodeContext& ctx) override;
  Command Act(const ControlInput& input) override;

 private:
  std::optional<ObjectState> EstimateState(const ControlInput& input);
  Forecast BuildForecast(const ControlInput& input, const std::optional<ObjectState>& est);
  Command ActModelFree(const ControlInput& input);

  Method method_;
  PlannerConfig planner_;
  Models models_;
  bool explore_;
  EpisodeContext ctx_;
  std::optional<ObjectState> last_estimate_;
  std::optional<Forecast> me_forecast_;
  int me_start_ = 0;
  KalmanState kalman_;
};

struct PolicyTrainConfig {
  int episodes = 20000;
  int batch_episodes = 8;
  // Training runs one Gaussian draw per step so the executed action is the
  // one the gradient is taken for; best-of-N selection biases the update.
  int n_samples = 1;
  int horizon = 3;
  // Fraction of the run drawn only from collision-free throws.
  double easy_fraction = 0.25;
  std::vector<int> hidden{64, 64};
  RewardSpec reward;
  ActorCriticConfig actor_critic;
  uint64_t seed = 1;
};

struct TrainPoint {
  int episode = 0;     // episodes seen so far
  double success = 0;  // fraction caught in this batch
  double mean_return = 0;
  double entropy = 0;
  double critic_loss = 0;
};

struct PolicyTrainResult {
  GaussianPolicy policy;
  Critic critic;
  std::vector<TrainPoint> curve;
};

// Synchronous actor-critic training of the planner's action sampler (or of
// the model-free policy when `model_free` is set). `easy` flags the
// collision-free entries of `episodes` for the curriculum.
PolicyTrainResult TrainPolicy(std::span<const EpisodeConfig> episodes, std::span<const bool> easy,
                              const Models& models, const PolicyTrainConfig& cfg,
                              bool model_free = false,
                              const std::function<void(const TrainPoint&)>& progress = {});

}  // namespace dronecatch

#endif  // DRONECATCH_CONTROLLERS_H_
