#ifndef DRONECATCH_NEURAL_H_
#define DRONECATCH_NEURAL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dronecatch/rng.h"
#include "json.hpp"

namespace dronecatch {

class Mlp;

// Activations retained by Mlp::Forward for the matching Backward call.
struct MlpCache {
  std::vector<Eigen::VectorXd> activations;  // input, hidden..., output
  const Mlp* owner = nullptr;
  uint64_t version = 0;
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input;

  // Same layout as Mlp::Parameters().
  std::vector<double> Flatten() const;
  void Accumulate(const MlpGradients& other);
};

// Feed-forward stack: tanh on hidden layers, identity on the output layer.
class Mlp {
 public:
  Mlp() = default;
  // All parameters zero.
  explicit Mlp(std::vector<int> layer_sizes);

  // Glorot-uniform weights, zero biases; the output layer is multiplied by
  // `output_scale`.
  static Mlp Random(std::vector<int> layer_sizes, Rng& rng, double output_scale = 1.0);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(weights_.size()); }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  const Eigen::MatrixXd& weight(int layer) const { return weights_[layer]; }
  const Eigen::VectorXd& bias(int layer) const { return biases_[layer]; }
  // Mutable access invalidates outstanding caches.
  Eigen::MatrixXd& mutable_weight(int layer);
  Eigen::VectorXd& mutable_bias(int layer);

  // Throws kDimensionMismatch on a wrong input length. `cache` may be null.
  Eigen::VectorXd Forward(const Eigen::VectorXd& input, MlpCache* cache = nullptr) const;

  // Gradients of dot(output, output_gradient) w.r.t. every parameter and the
  // input. Throws kStaleCache if the cache came from another network or the
  // parameters changed since the forward pass.
  MlpGradients Backward(const MlpCache& cache, const Eigen::VectorXd& output_gradient) const;

  MlpGradients ZeroGradients() const;

  size_t num_parameters() const;
  // Flat layout: per layer, weight (row-major) then bias.
  std::vector<double> Parameters() const;
  void SetParameters(std::span<const double> params);

  nlohmann::json ToJson() const;
  static Mlp FromJson(const nlohmann::json& j);

 private:
  void Touch();

  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  uint64_t version_ = 0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam. Moments are zero-initialized on first use; throws
// kShapeMismatch if params, grads and moments disagree in length.
void AdamStep(std::span<double> params, std::span<const double> grads, AdamState& state);

// Convenience: one Adam step on a network's parameters.
void AdamStep(Mlp& net, const MlpGradients& grads, AdamState& state);

// Versioned JSON checkpoints; doubles round-trip exactly.
void SaveJson(const std::string& path, const nlohmann::json& j);
nlohmann::json LoadJson(const std::string& path);

}  // namespace dronecatch

#endif  // DRONECATCH_NEURAL_H_
