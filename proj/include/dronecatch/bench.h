#ifndef DRONECATCH_BENCH_H_
#define DRONECATCH_BENCH_H_

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dronecatch/controllers.h"
#include "dronecatch/environment.h"
#include "dronecatch/forecaster.h"
#include "dronecatch/sampler.h"
#include "json.hpp"

namespace dronecatch {

struct BenchmarkSpec {
  int train_episodes = 2000;
  int val_episodes = 500;
  int test_episodes = 500;
  int repeats = 3;
  uint64_t seed = 2024;
  int threads = 1;
  std::vector<ObjectSpec> catalog;          // empty means DefaultCatalog()
  std::vector<std::string> held_out_objects; // test-only catalog entries
  EpisodeConfig base;                        // template for every episode

  std::vector<int> n_list{10, 100, 1000, 10000};
  std::vector<double> mobility{1.0, 0.8, 0.6, 0.4, 0.2};
  std::vector<double> movement_noise{0.01, 0.05, 0.1, 0.15};
  std::vector<int> horizons{1, 2, 3, 4, 5, 6};
  std::vector<CameraMode> cameras{CameraMode::kGroundTruth, CameraMode::kEstimated,
                                  CameraMode::kFixed};

  void Validate() const;
};

nlohmann::json BenchmarkSpecToJson(const BenchmarkSpec& spec);
BenchmarkSpec BenchmarkSpecFromJson(const nlohmann::json& j, BenchmarkSpec base = {});

struct Split {
  std::vector<EpisodeConfig> episodes;
  std::vector<int> reference_collisions;  // agent-free trajectory
  std::vector<Terminal> reference_terminal;
  // Reference positions in the agent start frame, one per control step.
  std::vector<std::vector<Vec3>> reference_tracks;
};

struct Dataset {
  Split train;
  Split val;
  Split test;
};

// Seeds of the three splits come from disjoint streams; objects cycle through
// the catalog so each entry gets the same number of throws (held-out objects
// appear only in the test split).
Dataset GenerateDataset(const BenchmarkSpec& spec);
Split MakeSplit(std::span<const EpisodeConfig> episodes);

// Writes configs_<split>.jsonl, reference_<split>.csv and proportions.csv.
void SaveDataset(const Dataset& data, const std::string& dir);

struct DifficultyProportions {
  std::array<int, 3> counts{};
  double percent(int d) const;
};
DifficultyProportions Proportions(const Split& split);

// One benchmark cell: a method plus the knobs the sweeps vary.
struct MethodSpec {
  Method method = Method::kFull;
  int n_samples = 1000;
  int horizon = 3;
  double mobility = 1.0;
  double movement_noise = 0.0;
  CameraMode camera = CameraMode::kEstimated;
  // Overrides of what the method implies, for ablations.
  std::optional<SamplerKind> sampler;
  std::optional<ForecastMode> forecast_mode;

  PlannerConfig Planner() const;
  std::string Label() const;
};

struct ErrorStat {
  double mean = 0.0;
  double std = 0.0;
  int count = 0;
};

// Forecaster errors. Position: mean L2 distance of the forecast o_{t+1..t+H}
// to the truth. Velocity and acceleration: L2 error of the current-state
// estimate against forward differences of the true positions, in per-step
// units (m/step, m/step^2) and in SI units.
struct ForecastErrors {
  ErrorStat position;
  ErrorStat velocity_step;
  ErrorStat acceleration_step;
  ErrorStat velocity_si;
  ErrorStat acceleration_si;
};

struct CellMetrics {
  MethodSpec spec;
  int episodes = 0;  // per repeat
  std::vector<double> success_per_repeat;  // percent
  double success_mean = 0.0;
  double success_std = 0.0;  // sample std over repeats
  std::array<int, 3> difficulty_episodes{};
  std::array<int, 3> difficulty_caught{};
  double mean_reward = 0.0;
  ForecastErrors errors;

  double DifficultySuccess(int d) const;
};

using MetricsTable = std::vector<CellMetrics>;

struct ModelStore {
  std::optional<LearnedEstimator> estimator;
  std::optional<KalmanState> kalman;
  std::optional<GaussianPolicy> policy;
  std::optional<GaussianPolicy> model_free;

  Models View() const;
  void Save(const std::string& dir) const;
  // Loads whatever checkpoints exist in `dir`.
  static ModelStore Load(const std::string& dir);
};

struct RunOptions {
  int repeats = 3;
  int threads = 1;
  uint64_t seed = 2024;
  bool keep_records = false;
};

// Runs every episode of `split` once per repeat. Repeats share the episodes
// and differ in the run seed. Results are reduced in episode order, so any
// thread count gives identical tables.
CellMetrics RunBenchmark(const Split& split, const ModelStore& models, const MethodSpec& method,
                         const RunOptions& options,
                         std::vector<EpisodeRecord>* records = nullptr);

enum class SweepAxis { kNSamples, kMobility, kNoise, kHorizon, kCamera };
const char* SweepAxisName(SweepAxis axis);
SweepAxis ParseSweepAxis(const std::string& name);

// Sweep points for an axis, all other knobs taken from `base`.
std::vector<MethodSpec> SweepPoints(const BenchmarkSpec& spec, SweepAxis axis,
                                    const MethodSpec& base);

MetricsTable RunSweep(const Split& split, const ModelStore& models,
                      std::span<const MethodSpec> points, const RunOptions& options,
                      const std::function<void(const CellMetrics&)>& progress = {});

double PooledStd(const CellMetrics& a, const CellMetrics& b);
// a > b: the gap exceeds one pooled std.
bool ClearlyGreater(const CellMetrics& a, const CellMetrics& b);
// a >= b: a is not below b by more than one pooled std.
bool NotWorse(const CellMetrics& a, const CellMetrics& b);

std::string MetricsCsv(const MetricsTable& table);
std::string ErrorsCsv(const MetricsTable& table);
std::string DifficultyCsv(const MetricsTable& table);

// Training helpers over a generated dataset.
std::vector<std::vector<Vec3>> TrainingTracks(const Split& split);
LearnedEstimator TrainForecaster(const Split& train, const EstimatorTrainConfig& cfg,
                                 double sigma_obs, TrainCurve* curve = nullptr);
PolicyTrainResult TrainPolicyOnSplit(const Split& train, const ModelStore& models,
                                     const PolicyTrainConfig& cfg, bool model_free,
                                     const std::function<void(const TrainPoint&)>& progress = {});

}  // namespace dronecatch

#endif  // DRONECATCH_BENCH_H_
