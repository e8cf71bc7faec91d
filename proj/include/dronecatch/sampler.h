#ifndef DRONECATCH_SAMPLER_H_
#define DRONECATCH_SAMPLER_H_

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dronecatch/environment.h"
#include "dronecatch/forecaster.h"
#include "dronecatch/neural.h"
#include "dronecatch/planner.h"

namespace dronecatch {

inline constexpr double kMinLogStd = -5.0;
inline constexpr double kMaxLogStd = 1.0;

// Diagonal Gaussian head over `action_dim` accelerations. The network emits
// [raw mean, raw log_std] in units of max_accel: mean = max_accel * raw mean,
// std = max_accel * exp(clamp(raw log_std, kMinLogStd, kMaxLogStd)).
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(Mlp net, int action_dim, double max_accel);

  // Hidden widths `hidden`, small random weights, log_std biases at
  // `initial_log_std`.
  static GaussianPolicy Create(int input_dim, int action_dim, std::vector<int> hidden,
                               double max_accel, Rng& rng, double initial_log_std = 0.0);

  struct Distribution {
    Eigen::VectorXd mean;
    Eigen::VectorXd log_std;      // log of the std in m/s^2
    Eigen::VectorXd raw_log_std;  // network output, before clamping
  };

  Distribution Evaluate(const Eigen::VectorXd& features, MlpCache* cache = nullptr) const;

  // Log-density of the first `dims` components of `draw` (all if dims < 0).
  static double LogProb(const Distribution& dist, const Eigen::VectorXd& draw, int dims = -1);
  // Differential entropy of the full distribution.
  static double Entropy(const Distribution& dist);

  int input_dim() const { return net_.input_size(); }
  int action_dim() const { return action_dim_; }
  double max_accel() const { return max_accel_; }
  const Mlp& net() const { return net_; }
  Mlp& mutable_net() { return net_; }

  nlohmann::json ToJson() const;
  static GaussianPolicy FromJson(const nlohmann::json& j);

 private:
  Mlp net_;
  int action_dim_ = 0;
  double max_accel_ = 25.0;
};

// Scalar value head on the policy features.
// The critic sees the policy features plus the control step, scaled by
// 1/kCriticStepScale, since the return left to collect depends on time to go.
inline constexpr double kCriticStepScale = 50.0;
Eigen::VectorXd CriticFeatures(const Eigen::VectorXd& policy_features, int step);

class Critic {
 public:
  Critic() = default;
  explicit Critic(Mlp net);
  static Critic Create(int input_dim, std::vector<int> hidden, Rng& rng);

  double Value(const Eigen::VectorXd& features, MlpCache* cache = nullptr) const;
  const Mlp& net() const { return net_; }
  Mlp& mutable_net() { return net_; }

  nlohmann::json ToJson() const;
  static Critic FromJson(const nlohmann::json& j);

 private:
  Mlp net_;
};

// Planner policy input: agent state (11), forecast positions (3H) and the
// estimated object state (9). Positions are taken relative to the agent.
int PolicyInputSize(int horizon);
Eigen::VectorXd PolicyFeatures(const AgentState& agent, const Forecast& forecast,
                               const ObjectState& estimate);

// Model-free input: window positions relative to the agent (9) and the agent
// state (11). Missing observations must be handled by the caller.
inline constexpr int kModelFreeInputSize = 20;
Eigen::VectorXd ModelFreeFeatures(const ObservationWindow& window, const AgentState& agent);

// Draws candidate sequences from a fixed Gaussian; candidate i uses its own
// counter-seeded stream. Candidate() returns the clamped sequence, RawCandidate()
// the pre-clamp draw.
class PolicySampler : public ActionSampler {
 public:
  PolicySampler(Eigen::VectorXd mean, Eigen::VectorXd std, double max_accel);
  PolicySampler(const GaussianPolicy::Distribution& dist, double max_accel);

  void Candidate(uint64_t seed, int index, int horizon, double* out) const override;
  Eigen::VectorXd RawCandidate(uint64_t seed, int index) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
  double max_accel_;
};

// Uniform candidate set of N sequences (N x H).
std::vector<ActionSequence> UniformSample(const PlannerConfig& cfg, const DroneSpec& drone, Rng& rng);

// N sequences from the policy at `features`, clamped; raw draws and their
// first-action log-probabilities are returned through the optional outputs.
std::vector<ActionSequence> PolicySample(const GaussianPolicy& policy,
                                         const Eigen::VectorXd& features,
                                         const PlannerConfig& cfg, Rng& rng,
                                         std::vector<Eigen::VectorXd>* raw = nullptr,
                                         std::vector<double>* log_probs = nullptr);

std::vector<double> ComputeReturns(const EpisodeRecord& record, const RewardSpec& spec);

struct ActorCriticConfig {
  double entropy_coefficient = 0.01;
  double policy_learning_rate = 1e-3;
  double critic_learning_rate = 1e-3;
  // Standardize the batch's policy advantages (zero mean, unit std).
  bool normalize_advantages = true;
  // GAE weight. 1 gives the Monte Carlo advantage G_t - V_t; smaller values
  // lean on the critic's one-step differences.
  double gae_lambda = 1.0;
};

struct ActorCriticState {
  AdamState policy_adam;
  AdamState critic_adam;
};

struct ActorCriticStats {
  int samples = 0;
  double mean_return = 0.0;
  double mean_advantage = 0.0;
  double entropy = 0.0;
  double critic_loss = 0.0;
};

// One synchronous advantage actor-critic step over every traced step of the
// batch. Only the first `credit_dims` components of each trace draw (the
// executed action) receive policy-gradient credit. Throws kEmptyBatch when no
// step carries a trace.
ActorCriticStats ActorCriticUpdate(GaussianPolicy& policy, Critic& critic,
                                   std::span<const EpisodeRecord> batch, const RewardSpec& spec,
                                   const ActorCriticConfig& cfg, ActorCriticState& state,
                                   int credit_dims = 3);

// Critic-only regression step on (features, return) pairs; returns the MSE
// before the step.
double CriticRegressionStep(Critic& critic, std::span<const Eigen::VectorXd> features,
                            std::span<const double> returns, AdamState& adam);

// Deterministic evaluation action: the clamped Gaussian mean. Missing or
// incomplete windows give zero action.
Vec3 ModelFreeAct(const GaussianPolicy& policy, const std::optional<ObservationWindow>& window,
                  const AgentState& agent);

}  // namespace dronecatch

#endif  // DRONECATCH_SAMPLER_H_
