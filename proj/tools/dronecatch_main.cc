// dronecatch command line: dataset generation, training, benchmarking and
// trajectory export/replay.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dronecatch/bench.h"
#include "dronecatch/catalog.h"
#include "dronecatch/error.h"
#include "dronecatch/io.h"
#include "dronecatch/neural.h"
#include "json.hpp"

namespace dc = dronecatch;
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string data_dir = "data";
  std::string models_dir = "models";
  std::string out;
  uint64_t seed = 2024;
  int threads = 1;
};

struct CellOptions {
  std::string method = "full";
  int n_samples = 1000;
  int horizon = 3;
  double mobility = 1.0;
  double move_noise = 0.0;
  std::string camera = "rotating";
  std::string sampler;
  std::string forecast_mode;
  int repeats = 3;
  std::string split = "test";
  int limit = 0;
};

void AddCellFlags(CLI::App* cmd, CellOptions& o) {
  cmd->add_option("--method", o.method,
                  "full | uniform-AS | ME | CPP | CPP+Kalman | model-free | oracle | all");
  cmd->add_option("--n-samples", o.n_samples, "Sampled action sequences per step (N)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", o.horizon, "Planning horizon H")->check(CLI::PositiveNumber);
  cmd->add_option("--mobility", o.mobility, "Fraction of the acceleration cap")
      ->check(CLI::Range(1e-6, 1.0));
  cmd->add_option("--move-noise", o.move_noise, "Movement noise std, fraction of max accel")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--camera", o.camera, "rotating | fixed | ground-truth");
  cmd->add_option("--sampler", o.sampler, "Override the action sampler: uniform | policy");
  cmd->add_option("--forecast-mode", o.forecast_mode,
                  "Override the forecaster: refreshed | me_only | cpp_static | kalman_static | "
                  "oracle");
  cmd->add_option("--repeats", o.repeats, "Repeats per cell")->check(CLI::PositiveNumber);
  cmd->add_option("--split", o.split, "Dataset split to run: train | val | test");
  cmd->add_option("--limit", o.limit, "Use only the first K episodes of the split (0 = all)")
      ->check(CLI::NonNegativeNumber);
}

void AddCommonFlags(CLI::App* cmd, CommonOptions& c, bool models) {
  cmd->add_option("--data", c.data_dir, "Dataset directory written by gen-data");
  if (models) cmd->add_option("--models", c.models_dir, "Checkpoint directory");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

dc::MethodSpec MakeSpec(dc::Method method, const CellOptions& o) {
  dc::MethodSpec m;
  m.method = method;
  m.n_samples = o.n_samples;
  m.horizon = o.horizon;
  m.mobility = o.mobility;
  m.movement_noise = o.move_noise;
  m.camera = dc::ParseCameraMode(o.camera);
  if (!o.sampler.empty()) m.sampler = dc::ParseSamplerKind(o.sampler);
  if (!o.forecast_mode.empty()) m.forecast_mode = dc::ParseForecastMode(o.forecast_mode);
  return m;
}

std::vector<dc::Method> MethodsFor(const std::string& name) {
  if (name == "all") return dc::AllMethods();
  return {dc::ParseMethod(name)};
}

dc::BenchmarkSpec LoadSpec(const std::string& data_dir) {
  const std::string path = data_dir + "/benchmark.json";
  if (!fs::exists(path)) {
    throw dc::Error(dc::ErrorKind::kMissingCheckpoint,
                    "no dataset at '" + data_dir + "' (run gen-data first)");
  }
  return dc::BenchmarkSpecFromJson(dc::LoadJson(path));
}

dc::Split SelectSplit(const dc::BenchmarkSpec& spec, const std::string& name, int limit) {
  dc::Dataset data = dc::GenerateDataset(spec);
  dc::Split* split = nullptr;
  if (name == "train") split = &data.train;
  else if (name == "val") split = &data.val;
  else if (name == "test") split = &data.test;
  else throw dc::Error(dc::ErrorKind::kInvalidArgument, "unknown split '" + name + "'");
  if (limit > 0 && limit < static_cast<int>(split->episodes.size())) {
    std::vector<dc::EpisodeConfig> head(split->episodes.begin(), split->episodes.begin() + limit);
    return dc::MakeSplit(head);
  }
  return std::move(*split);
}

void PrintCell(const dc::CellMetrics& c) {
  std::printf("%-60s success %6.2f%% +- %5.2f  easy %6.2f  medium %6.2f  difficult %6.2f\n",
              c.spec.Label().c_str(), c.success_mean, c.success_std, c.DifficultySuccess(0),
              c.DifficultySuccess(1), c.DifficultySuccess(2));
}

void WriteTables(const dc::MetricsTable& table, const std::string& out) {
  if (out.empty()) return;
  fs::create_directories(out);
  dc::WriteTextFile(out + "/metrics.csv", dc::MetricsCsv(table));
  dc::WriteTextFile(out + "/errors.csv", dc::ErrorsCsv(table));
  dc::WriteTextFile(out + "/difficulty.csv", dc::DifficultyCsv(table));
  std::printf("wrote %s/{metrics,errors,difficulty}.csv\n", out.c_str());
}

int GenData(const CommonOptions& c, int train, int val, int test, const std::string& catalog,
            const std::string& config, const std::vector<std::string>& held_out) {
  dc::BenchmarkSpec spec;
  if (!config.empty()) spec = dc::BenchmarkSpecFromJson(dc::LoadJson(config));
  spec.seed = c.seed;
  if (train > 0) spec.train_episodes = train;
  if (val > 0) spec.val_episodes = val;
  if (test > 0) spec.test_episodes = test;
  if (!catalog.empty()) spec.catalog = dc::LoadCatalog(catalog);
  if (spec.catalog.empty()) spec.catalog = dc::DefaultCatalog();
  if (!held_out.empty()) spec.held_out_objects = held_out;
  const std::string dir = c.out.empty() ? c.data_dir : c.out;
  dc::Dataset data = dc::GenerateDataset(spec);
  dc::SaveDataset(data, dir);
  dc::SaveJson(dir + "/benchmark.json", dc::BenchmarkSpecToJson(spec));
  for (const auto& [name, split] :
       {std::pair<const char*, const dc::Split*>{"train", &data.train},
        {"val", &data.val},
        {"test", &data.test}}) {
    dc::DifficultyProportions p = dc::Proportions(*split);
    std::printf("%-5s %5zu episodes  easy %5.1f%%  medium %5.1f%%  difficult %5.1f%%\n", name,
                split->episodes.size(), p.percent(0), p.percent(1), p.percent(2));
  }
  std::printf("dataset written to %s\n", dir.c_str());
  return 0;
}

int TrainForecasterCmd(const CommonOptions& c, dc::EstimatorTrainConfig cfg) {
  dc::BenchmarkSpec spec = LoadSpec(c.data_dir);
  dc::Dataset data = dc::GenerateDataset(spec);
  cfg.seed = c.seed;
  dc::TrainCurve curve;
  dc::ModelStore store = fs::exists(c.models_dir) ? dc::ModelStore::Load(c.models_dir)
                                                  : dc::ModelStore{};
  store.estimator =
      dc::TrainForecaster(data.train, cfg, spec.base.observation.sigma_obs, &curve);
  store.kalman = dc::KalmanInit(std::span<const std::vector<dc::Vec3>>(data.train.reference_tracks));
  store.Save(c.models_dir);
  std::ostringstream csv;
  csv << "epoch,loss\n";
  for (size_t i = 0; i < curve.epoch_loss.size(); ++i) {
    csv << i + 1 << ',' << curve.epoch_loss[i] << '\n';
    std::printf("epoch %2zu  L1 %.6f\n", i + 1, curve.epoch_loss[i]);
  }
  dc::WriteTextFile(c.models_dir + "/estimator_loss.csv", csv.str());
  std::printf("estimator and kalman checkpoints written to %s\n", c.models_dir.c_str());
  return 0;
}

int TrainPolicyCmd(const CommonOptions& c, dc::PolicyTrainConfig cfg, bool model_free) {
  dc::BenchmarkSpec spec = LoadSpec(c.data_dir);
  dc::Dataset data = dc::GenerateDataset(spec);
  dc::ModelStore store = dc::ModelStore::Load(c.models_dir);
  if (!model_free && !store.estimator) {
    throw dc::Error(dc::ErrorKind::kMissingCheckpoint,
                    "estimator.json missing (run train-forecaster first)");
  }
  cfg.seed = c.seed;
  std::ostringstream csv;
  csv << "episodes,success,mean_return,entropy,critic_loss\n";
  int last_print = 0;
  auto progress = [&](const dc::TrainPoint& p) {
    csv << p.episode << ',' << p.success << ',' << p.mean_return << ',' << p.entropy << ','
        << p.critic_loss << '\n';
    if (p.episode - last_print >= 1000) {
      last_print = p.episode;
      std::printf("episodes %6d  success %.3f  return %8.3f  entropy %7.3f\n", p.episode,
                  p.success, p.mean_return, p.entropy);
      std::fflush(stdout);
    }
  };
  dc::PolicyTrainResult result = dc::TrainPolicyOnSplit(data.train, store, cfg, model_free, progress);
  if (model_free) store.model_free = result.policy;
  else store.policy = result.policy;
  store.Save(c.models_dir);
  const std::string stem = model_free ? "model_free" : "policy";
  dc::SaveJson(c.models_dir + "/" + stem + "_critic.json", result.critic.ToJson());
  dc::WriteTextFile(c.models_dir + "/" + stem + "_curve.csv", csv.str());
  std::printf("%s checkpoint written to %s\n", stem.c_str(), c.models_dir.c_str());
  return 0;
}

int BenchCmd(const CommonOptions& c, const CellOptions& o) {
  dc::BenchmarkSpec spec = LoadSpec(c.data_dir);
  dc::Split split = SelectSplit(spec, o.split, o.limit);
  dc::ModelStore store = dc::ModelStore::Load(c.models_dir);
  dc::RunOptions run{o.repeats, c.threads, c.seed, false};
  dc::MetricsTable table;
  for (dc::Method m : MethodsFor(o.method)) {
    table.push_back(dc::RunBenchmark(split, store, MakeSpec(m, o), run));
    PrintCell(table.back());
    std::fflush(stdout);
  }
  WriteTables(table, c.out);
  return 0;
}

int SweepCmd(const CommonOptions& c, const CellOptions& o, const std::string& axis_name) {
  dc::BenchmarkSpec spec = LoadSpec(c.data_dir);
  dc::Split split = SelectSplit(spec, o.split, o.limit);
  dc::ModelStore store = dc::ModelStore::Load(c.models_dir);
  dc::RunOptions run{o.repeats, c.threads, c.seed, false};
  const dc::SweepAxis axis = dc::ParseSweepAxis(axis_name);
  dc::MetricsTable table;
  for (dc::Method m : MethodsFor(o.method)) {
    std::vector<dc::MethodSpec> points = dc::SweepPoints(spec, axis, MakeSpec(m, o));
    dc::MetricsTable part = dc::RunSweep(split, store, points, run, [](const dc::CellMetrics& cell) {
      PrintCell(cell);
      std::fflush(stdout);
    });
    table.insert(table.end(), part.begin(), part.end());
  }
  WriteTables(table, c.out);
  return 0;
}

int ExportCmd(const CommonOptions& c, const CellOptions& o) {
  dc::BenchmarkSpec spec = LoadSpec(c.data_dir);
  dc::Split split = SelectSplit(spec, o.split, o.limit);
  dc::ModelStore store = dc::ModelStore::Load(c.models_dir);
  const std::vector<dc::Method> methods = MethodsFor(o.method);
  if (methods.size() != 1) {
    throw dc::Error(dc::ErrorKind::kInvalidArgument, "export takes a single --method");
  }
  dc::RunOptions run{o.repeats, c.threads, c.seed, true};
  std::vector<dc::EpisodeRecord> records;
  dc::CellMetrics cell = dc::RunBenchmark(split, store, MakeSpec(methods[0], o), run, &records);
  PrintCell(cell);
  const std::string path = c.out.empty() ? "trajectories.jsonl" : c.out;
  dc::ExportTrajectories(records, path);
  fs::path summary = fs::path(path).replace_extension(".csv");
  dc::ExportSummaryCsv(records, summary.string());
  std::printf("wrote %zu episodes to %s and %s\n", records.size(), path.c_str(),
              summary.string().c_str());
  return 0;
}

int ReplayCmd(const std::string& in, int episode, const std::string& out) {
  std::vector<dc::EpisodeRecord> records = dc::ImportTrajectories(in);
  if (episode >= static_cast<int>(records.size())) {
    throw dc::Error(dc::ErrorKind::kInvalidArgument, "episode index out of range");
  }
  if (episode < 0) {
    int caught = 0;
    for (const dc::EpisodeRecord& r : records) {
      caught += r.outcome == dc::Outcome::kCaught;
      std::printf("seed %20llu  %-12s  steps %3zu  collisions %d  %-8s  reward %8.3f\n",
                  static_cast<unsigned long long>(r.seed), r.object_id.c_str(), r.steps.size(),
                  r.collision_count, dc::OutcomeName(r.outcome), r.reward);
    }
    std::printf("%zu episodes, %d caught (%.2f%%)\n", records.size(), caught,
                records.empty() ? 0.0 : 100.0 * caught / records.size());
    if (!out.empty()) dc::ExportSummaryCsv(records, out);
    return 0;
  }
  const dc::EpisodeRecord& r = records[episode];
  std::ostringstream csv;
  csv << "t,dx,dy,dz,ox,oy,oz,ax,ay,az,visible,distance,collided\n";
  std::printf("episode %d  object %s  outcome %s\n", episode, r.object_id.c_str(),
              dc::OutcomeName(r.outcome));
  for (const dc::StepLog& s : r.steps) {
    dc::Vec3 d = s.agent.d;
    double dist = dc::Distance(d, s.object.o);
    std::printf("t %3d  drone (%6.2f %6.2f %6.2f)  object (%6.2f %6.2f %6.2f)  |d-o| %5.2f%s\n",
                s.t, d.x, d.y, d.z, s.object.o.x, s.object.o.y, s.object.o.z, dist,
                s.collided ? "  bounce" : "");
    csv << s.t << ',' << d.x << ',' << d.y << ',' << d.z << ',' << s.object.o.x << ','
        << s.object.o.y << ',' << s.object.o.z << ',' << s.action.x << ',' << s.action.y
        << ',' << s.action.z << ',' << s.observation.visible() << ',' << dist << ','
        << s.collided << '\n';
  }
  if (!out.empty()) dc::WriteTextFile(out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drone catching benchmark: forecasting, sampling-based MPC and training"};
  app.require_subcommand(1);

  CommonOptions common;
  CellOptions cell;

  int n_train = 0, n_val = 0, n_test = 0;
  std::string catalog, config;
  std::vector<std::string> held_out;
  CLI::App* gen = app.add_subcommand("gen-data", "Generate train/val/test throw configurations");
  gen->add_option("--out", common.out, "Output directory (default: --data)");
  gen->add_option("--seed", common.seed, "Dataset seed");
  gen->add_option("--data", common.data_dir, "Dataset directory");
  gen->add_option("--train", n_train, "Training episodes");
  gen->add_option("--val", n_val, "Validation episodes");
  gen->add_option("--test", n_test, "Test episodes");
  gen->add_option("--catalog", catalog, "Object catalog file");
  gen->add_option("--config", config, "Benchmark spec JSON to start from");
  gen->add_option("--held-out", held_out, "Object ids used only in the test split");

  dc::EstimatorTrainConfig est_cfg;
  CLI::App* tf = app.add_subcommand("train-forecaster", "Train the learned estimator and Kalman");
  AddCommonFlags(tf, common, true);
  tf->add_option("--out", common.models_dir, "Checkpoint directory (alias of --models)");
  tf->add_option("--epochs", est_cfg.epochs)->check(CLI::PositiveNumber);
  tf->add_option("--batch-size", est_cfg.batch_size)->check(CLI::PositiveNumber);
  tf->add_option("--lr", est_cfg.learning_rate)->check(CLI::PositiveNumber);

  dc::PolicyTrainConfig pol_cfg;
  bool model_free = false;
  CLI::App* tp = app.add_subcommand("train-policy", "Train the action sampler policy");
  AddCommonFlags(tp, common, true);
  tp->add_option("--out", common.models_dir, "Checkpoint directory (alias of --models)");
  tp->add_option("--episodes", pol_cfg.episodes, "Training episodes")->check(CLI::PositiveNumber);
  tp->add_option("--batch", pol_cfg.batch_episodes, "Episodes per update")
      ->check(CLI::PositiveNumber);
  tp->add_option("--n-samples", pol_cfg.n_samples, "N during training")->check(CLI::PositiveNumber);
  tp->add_option("--horizon", pol_cfg.horizon, "H during training")->check(CLI::PositiveNumber);
  tp->add_option("--easy-fraction", pol_cfg.easy_fraction, "Curriculum share of easy throws")
      ->check(CLI::Range(0.0, 1.0));
  tp->add_option("--lr", pol_cfg.actor_critic.policy_learning_rate, "Policy learning rate");
  tp->add_option("--critic-lr", pol_cfg.actor_critic.critic_learning_rate, "Critic learning rate");
  tp->add_option("--gae-lambda", pol_cfg.actor_critic.gae_lambda, "Advantage weighting (1 = Monte Carlo)")
      ->check(CLI::Range(0.0, 1.0));
  tp->add_option("--entropy", pol_cfg.actor_critic.entropy_coefficient, "Entropy bonus coefficient");
  tp->add_option("--normalize-advantages", pol_cfg.actor_critic.normalize_advantages,
                 "Standardize advantages per batch");
  tp->add_flag("--model-free", model_free, "Train the model-free baseline instead");
  std::string tp_method;
  tp->add_option("--method", tp_method, "full (default) | model-free");

  CLI::App* bench = app.add_subcommand("bench", "Evaluate methods on a split");
  AddCommonFlags(bench, common, true);
  AddCellFlags(bench, cell);
  bench->add_option("--out", common.out, "Directory for CSV tables");

  std::string axis = "n_samples";
  CLI::App* sweep = app.add_subcommand("sweep", "Sweep one knob for the chosen methods");
  AddCommonFlags(sweep, common, true);
  AddCellFlags(sweep, cell);
  sweep->add_option("--axis", axis, "n_samples | mobility | noise | horizon | camera");
  sweep->add_option("--out", common.out, "Directory for CSV tables");

  CLI::App* exp = app.add_subcommand("export", "Run a method and export trajectories (JSONL)");
  AddCommonFlags(exp, common, true);
  AddCellFlags(exp, cell);
  exp->add_option("--out", common.out, "Output .jsonl path");

  std::string replay_in, replay_out;
  int replay_episode = -1;
  CLI::App* replay = app.add_subcommand("replay", "Summarize or step through exported episodes");
  replay->add_option("--in", replay_in, "Trajectory file from export")->required();
  replay->add_option("--episode", replay_episode, "Print one episode step by step");
  replay->add_option("--out", replay_out, "Write the summary (or the episode) as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return GenData(common, n_train, n_val, n_test, catalog, config, held_out);
    if (*tf) return TrainForecasterCmd(common, est_cfg);
    if (*tp) {
      if (!tp_method.empty()) model_free = dc::ParseMethod(tp_method) == dc::Method::kModelFree;
      return TrainPolicyCmd(common, pol_cfg, model_free);
    }
    if (*bench) return BenchCmd(common, cell);
    if (*sweep) return SweepCmd(common, cell, axis);
    if (*exp) return ExportCmd(common, cell);
    if (*replay) return ReplayCmd(replay_in, replay_episode, replay_out);
  } catch (const dc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
