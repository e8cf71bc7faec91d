#include "dronecatch/neural.h"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dronecatch/error.h"

namespace dronecatch {
namespace {

std::atomic<uint64_t> g_version_counter{1};

constexpr const char* kMlpFormat = "dronecatch-mlp";
constexpr int kMlpFormatVersion = 1;

}  // namespace

std::vector<double> MlpGradients::Flatten() const {
  std::vector<double> out;
  for (size_t l = 0; l < weights.size(); ++l) {
    const Eigen::MatrixXd& w = weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) out.push_back(w(r, c));
    }
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) out.push_back(biases[l](r));
  }
  return out;
}

void MlpGradients::Accumulate(const MlpGradients& other) {
  if (other.weights.size() != weights.size()) {
    throw Error(ErrorKind::kShapeMismatch, "gradient layer count differs");
  }
  for (size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
}

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "mlp needs at least two layer sizes");
  }
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) {
      throw Error(ErrorKind::kInvalidArgument, "layer sizes must be positive");
    }
    weights_.push_back(Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]));
    biases_.push_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
  }
  Touch();
}

Mlp Mlp::Random(std::vector<int> layer_sizes, Rng& rng, double output_scale) {
  Mlp net(std::move(layer_sizes));
  for (int l = 0; l < net.num_layers(); ++l) {
    Eigen::MatrixXd& w = net.weights_[l];
    double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    if (l + 1 == net.num_layers()) limit *= output_scale;
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
  }
  net.Touch();
  return net;
}

void Mlp::Touch() { version_ = g_version_counter.fetch_add(1); }

Eigen::MatrixXd& Mlp::mutable_weight(int layer) {
  Touch();
  return weights_[layer];
}

Eigen::VectorXd& Mlp::mutable_bias(int layer) {
  Touch();
  return biases_[layer];
}

Eigen::VectorXd Mlp::Forward(const Eigen::VectorXd& input, MlpCache* cache) const {
  if (sizes_.empty() || input.size() != sizes_.front()) {
    std::ostringstream msg;
    msg << "mlp expects input of size " << (sizes_.empty() ? 0 : sizes_.front())
        << ", got " << input.size();
    throw Error(ErrorKind::kDimensionMismatch, msg.str());
  }
  if (cache != nullptr) {
    cache->activations.clear();
    cache->activations.push_back(input);
    cache->owner = this;
    cache->version = version_;
  }
  Eigen::VectorXd x = input;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::VectorXd z = weights_[l] * x + biases_[l];
    x = (l + 1 < num_layers()) ? Eigen::VectorXd(z.array().tanh()) : z;
    if (cache != nullptr) cache->activations.push_back(x);
  }
  return x;
}

MlpGradients Mlp::ZeroGradients() const {
  MlpGradients g;
  for (int l = 0; l < num_layers(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  g.input = Eigen::VectorXd::Zero(sizes_.empty() ? 0 : sizes_.front());
  return g;
}

MlpGradients Mlp::Backward(const MlpCache& cache, const Eigen::VectorXd& output_gradient) const {
  if (cache.owner != this || cache.version != version_ ||
      cache.activations.size() != sizes_.size()) {
    throw Error(ErrorKind::kStaleCache, "cache does not match network parameters");
  }
  if (output_gradient.size() != sizes_.back()) {
    throw Error(ErrorKind::kDimensionMismatch, "output gradient length mismatch");
  }
  MlpGradients g;
  g.weights.resize(num_layers());
  g.biases.resize(num_layers());
  Eigen::VectorXd delta = output_gradient;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Eigen::VectorXd& in = cache.activations[l];
    g.weights[l] = delta * in.transpose();
    g.biases[l] = delta;
    Eigen::VectorXd back = weights_[l].transpose() * delta;
    if (l > 0) {
      // in = tanh(z), dtanh = 1 - in^2
      delta = back.array() * (1.0 - in.array().square());
    } else {
      g.input = back;
    }
  }
  return g;
}

size_t Mlp::num_parameters() const {
  size_t n = 0;
  for (int l = 0; l < num_layers(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

std::vector<double> Mlp::Parameters() const {
  std::vector<double> out;
  out.reserve(num_parameters());
  for (int l = 0; l < num_layers(); ++l) {
    const Eigen::MatrixXd& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) out.push_back(w(r, c));
    }
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) out.push_back(biases_[l](r));
  }
  return out;
}

void Mlp::SetParameters(std::span<const double> params) {
  if (params.size() != num_parameters()) {
    throw Error(ErrorKind::kShapeMismatch, "parameter vector length mismatch");
  }
  size_t k = 0;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = params[k++];
    }
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) biases_[l](r) = params[k++];
  }
  Touch();
}

nlohmann::json Mlp::ToJson() const {
  return {{"format", kMlpFormat},
          {"version", kMlpFormatVersion},
          {"activation", "tanh"},
          {"layer_sizes", sizes_},
          {"parameters", Parameters()}};
}

Mlp Mlp::FromJson(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kMlpFormat ||
        j.at("version").get<int>() != kMlpFormatVersion) {
      throw Error(ErrorKind::kParse, "unsupported mlp checkpoint format");
    }
    Mlp net(j.at("layer_sizes").get<std::vector<int>>());
    net.SetParameters(j.at("parameters").get<std::vector<double>>());
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("mlp checkpoint: ") + e.what());
  }
}

void AdamStep(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw Error(ErrorKind::kShapeMismatch, "adam: parameter/gradient/moment sizes differ");
  }
  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
    double m_hat = state.m[i] / c1;
    double v_hat = state.v[i] / c2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void AdamStep(Mlp& net, const MlpGradients& grads, AdamState& state) {
  std::vector<double> params = net.Parameters();
  std::vector<double> flat = grads.Flatten();
  AdamStep(params, flat, state);
  net.SetParameters(params);
}

void SaveJson(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << j.dump() << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path);
}

nlohmann::json LoadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingCheckpoint, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, path + ": " + e.what());
  }
}

}  // namespace dronecatch
