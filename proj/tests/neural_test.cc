#include "dronecatch/neural.h"

#include <cmath>

#include <gtest/gtest.h>

#include "dronecatch/error.h"
#include "dronecatch/forecaster.h"
#include "dronecatch/sampler.h"

namespace dronecatch {
namespace {

// Max relative error of Backward against central differences of
// dot(Forward(x), w) over every parameter and input component.
double GradientError(Mlp net, const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
  MlpCache cache;
  net.Forward(x, &cache);
  MlpGradients g = net.Backward(cache, w);
  std::vector<double> analytic = g.Flatten();
  std::vector<double> params = net.Parameters();
  const double eps = 1e-5;
  double worst = 0.0;
  auto rel = [](double a, double n) { return std::abs(a - n) / std::max(std::abs(a) + std::abs(n), 1e-7); };
  for (size_t i = 0; i < params.size(); ++i) {
    std::vector<double> p = params;
    p[i] = params[i] + eps;
    net.SetParameters(p);
    double up = net.Forward(x).dot(w);
    p[i] = params[i] - eps;
    net.SetParameters(p);
    double down = net.Forward(x).dot(w);
    worst = std::max(worst, rel(analytic[i], (up - down) / (2 * eps)));
  }
  net.SetParameters(params);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += eps;
    xm(i) -= eps;
    double numeric = (net.Forward(xp).dot(w) - net.Forward(xm).dot(w)) / (2 * eps);
    worst = std::max(worst, rel(g.input(i), numeric));
  }
  return worst;
}

double CheckArchitecture(std::vector<int> sizes, uint64_t seed) {
  Rng rng(seed);
  Mlp net = Mlp::Random(sizes, rng, 1.0);
  std::normal_distribution<double> n(0, 1);
  Eigen::VectorXd x(sizes.front()), w(sizes.back());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n(rng);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = n(rng);
  return GradientError(net, x, w);
}

TEST(MlpTest, ZeroWeightsGiveFinalBias) {
  Mlp net({4, 5, 3});
  net.mutable_bias(1) << 1, -2, 3;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(4, 7.0);
  EXPECT_EQ(net.Forward(x), net.bias(1));
}

TEST(MlpTest, IdentityLayer) {
  Mlp net({3, 3});
  net.mutable_weight(0) = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd x(3);
  x << 0.5, -1.5, 2.0;
  EXPECT_EQ(net.Forward(x), x);
}

TEST(MlpTest, ForwardIsPure) {
  Rng rng(1);
  Mlp net = Mlp::Random({6, 8, 8, 2}, rng);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, -1, 1);
  EXPECT_EQ(net.Forward(x), net.Forward(x));
}

TEST(MlpTest, WrongInputLength) {
  Mlp net({3, 2});
  try {
    net.Forward(Eigen::VectorXd::Zero(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
}

TEST(MlpTest, StaleCacheRejected) {
  Rng rng(2);
  Mlp net = Mlp::Random({3, 4, 2}, rng);
  Mlp other = net;
  MlpCache cache;
  net.Forward(Eigen::VectorXd::Ones(3), &cache);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(2);
  EXPECT_NO_THROW(net.Backward(cache, w));
  EXPECT_THROW(other.Backward(cache, w), Error);
  net.mutable_bias(0)(0) += 1.0;
  try {
    net.Backward(cache, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kStaleCache);
  }
}

TEST(MlpTest, ZeroOutputGradient) {
  Rng rng(3);
  Mlp net = Mlp::Random({3, 4, 2}, rng);
  MlpCache cache;
  net.Forward(Eigen::VectorXd::Ones(3), &cache);
  for (double v : net.Backward(cache, Eigen::VectorXd::Zero(2)).Flatten()) EXPECT_EQ(v, 0.0);
}

TEST(MlpTest, FiniteDifferenceThreeLayer) {
  EXPECT_LT(CheckArchitecture({5, 7, 6, 3}, 4), 1e-4);
}

TEST(MlpTest, FiniteDifferenceEveryArchitectureInUse) {
  const int h = 3;
  EXPECT_LT(CheckArchitecture({LearnedEstimator::kInputSize, 64, 64, LearnedEstimator::kOutputSize}, 5), 1e-4);
  EXPECT_LT(CheckArchitecture({PolicyInputSize(h), 64, 64, 6 * h}, 6), 1e-4);
  EXPECT_LT(CheckArchitecture({PolicyInputSize(h) + 1, 64, 64, 1}, 7), 1e-4);
  EXPECT_LT(CheckArchitecture({kModelFreeInputSize, 64, 64, 6}, 8), 1e-4);
  EXPECT_LT(CheckArchitecture({kModelFreeInputSize + 1, 64, 64, 1}, 9), 1e-4);
}

TEST(MlpTest, LinearLeastSquaresGradient) {
  Rng rng(10);
  Mlp net = Mlp::Random({3, 2}, rng);
  std::normal_distribution<double> n(0, 1);
  const int m = 20;
  Eigen::MatrixXd xs(3, m), ys(2, m);
  for (int i = 0; i < m; ++i) {
    for (int r = 0; r < 3; ++r) xs(r, i) = n(rng);
    for (int r = 0; r < 2; ++r) ys(r, i) = n(rng);
  }
  // L = 1/2 sum ||W x + b - y||^2: dW = R X^T, db = R 1.
  Eigen::MatrixXd resid = (net.weight(0) * xs).colwise() + net.bias(0) - ys;
  Eigen::MatrixXd dw = resid * xs.transpose();
  Eigen::VectorXd db = resid.rowwise().sum();

  MlpGradients total = net.ZeroGradients();
  MlpCache cache;
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd out = net.Forward(xs.col(i), &cache);
    total.Accumulate(net.Backward(cache, out - ys.col(i)));
  }
  EXPECT_LT((total.weights[0] - dw).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((total.biases[0] - db).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MlpTest, JsonRoundTripIsExact) {
  Rng rng(11);
  Mlp net = Mlp::Random({4, 9, 3}, rng);
  Mlp back = Mlp::FromJson(nlohmann::json::parse(net.ToJson().dump()));
  EXPECT_EQ(back.Parameters(), net.Parameters());
  EXPECT_EQ(back.layer_sizes(), net.layer_sizes());
}

TEST(AdamTest, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0};
  std::vector<double> g{0.0, 0.0};
  AdamState s;
  AdamStep(p, g, s);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(s.step, 1);
}

TEST(AdamTest, FirstStepFormula) {
  std::vector<double> p{0.0, 0.0, 0.0};
  std::vector<double> g{0.5, -2.0, 1e-3};
  AdamState s;
  s.learning_rate = 0.01;
  AdamStep(p, g, s);
  for (size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(p[i], -0.01 * g[i] / (std::abs(g[i]) + s.epsilon), 1e-15);
  }
}

TEST(AdamTest, ConstantGradientMovesAtLearningRate) {
  std::vector<double> p{0.0};
  std::vector<double> g{3.0};
  AdamState s;
  s.learning_rate = 1e-3;
  double prev = 0.0;
  for (int i = 0; i < 2000; ++i) {
    AdamStep(p, g, s);
    if (i > 1000) EXPECT_NEAR(prev - p[0], 1e-3, 1e-6);
    prev = p[0];
  }
}

TEST(AdamTest, ShapeMismatch) {
  std::vector<double> p{0.0, 1.0};
  std::vector<double> g{1.0};
  AdamState s;
  try {
    AdamStep(p, g, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
  }
}

TEST(TrainingTest, L1LossFallsOnLinearData) {
  Rng rng(12);
  Mlp net = Mlp::Random({4, 16, 2}, rng);
  Eigen::MatrixXd truth(2, 4);
  truth << 0.5, -1.0, 0.25, 0.0, 1.0, 0.5, -0.5, 0.75;
  std::normal_distribution<double> n(0, 1);
  AdamState adam;
  adam.learning_rate = 3e-3;
  std::vector<double> losses;
  for (int step = 0; step < 500; ++step) {
    MlpGradients g = net.ZeroGradients();
    MlpCache cache;
    double loss = 0.0;
    for (int b = 0; b < 16; ++b) {
      Eigen::VectorXd x(4);
      for (int i = 0; i < 4; ++i) x(i) = n(rng);
      Eigen::VectorXd e = net.Forward(x, &cache) - truth * x;
      loss += e.cwiseAbs().sum() / (2 * 16);
      g.Accumulate(net.Backward(cache, e.cwiseSign() / (2 * 16)));
    }
    losses.push_back(loss);
    AdamStep(net, g, adam);
  }
  std::vector<double> windows;
  for (size_t i = 0; i + 100 <= losses.size(); i += 100) {
    double s = 0;
    for (size_t k = i; k < i + 100; ++k) s += losses[k];
    windows.push_back(s / 100);
  }
  for (size_t i = 1; i < windows.size(); ++i) EXPECT_LT(windows[i], windows[i - 1]);
}

}  // namespace
}  // namespace dronecatch
