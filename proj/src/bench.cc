#include "dronecatch/bench.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "dronecatch/catalog.h"
#include "dronecatch/error.h"
#include "dronecatch/io.h"

namespace dronecatch {
namespace {

using nlohmann::json;

// Split stream indices under DeriveSeed(spec.seed, .).
constexpr uint64_t kTrainSplit = 101;
constexpr uint64_t kValSplit = 102;
constexpr uint64_t kTestSplit = 103;

struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  int count = 0;

  void Add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  ErrorStat Stat() const {
    ErrorStat s;
    s.count = count;
    if (count == 0) return s;
    s.mean = sum / count;
    s.std = count > 1 ? std::sqrt(std::max(0.0, (sum_sq - sum * s.mean) / (count - 1))) : 0.0;
    return s;
  }
};

struct EpisodeResult {
  bool caught = false;
  int difficulty = 0;
  double reward = 0.0;
  std::vector<double> position_err;
  std::vector<double> velocity_err;      // m/step
  std::vector<double> acceleration_err;  // m/step^2
};

// Difficulty is a property of the throw: the agent-free reference collisions,
// so a catch that ends the episode early does not relabel it.
EpisodeResult Summarize(const EpisodeRecord& rec, const std::vector<Vec3>& truth,
                        int reference_collisions, double dt) {
  EpisodeResult r;
  r.caught = rec.outcome == Outcome::kCaught;
  r.difficulty = static_cast<int>(ClassifyDifficulty(reference_collisions));
  r.reward = rec.reward;
  const int n = static_cast<int>(truth.size());
  for (const StepLog& s : rec.steps) {
    const int t = s.t;
    if (!s.forecast.empty()) {
      double sum = 0.0;
      int used = 0;
      for (int k = 1; k <= static_cast<int>(s.forecast.size()) && t + k < n; ++k) {
        sum += Distance(s.forecast[k - 1], truth[t + k]);
        ++used;
      }
      if (used > 0) r.position_err.push_back(sum / used);
    }
    if (s.estimate && t + 1 < n) {
      Vec3 disp = truth[t + 1] - truth[t];
      r.velocity_err.push_back(Distance(s.estimate->v * dt, disp));
      if (t + 2 < n) {
        Vec3 second = truth[t + 2] - truth[t + 1] * 2.0 + truth[t];
        r.acceleration_err.push_back(Distance(s.estimate->a * (dt * dt), second));
      }
    }
  }
  return r;
}

// Runs fn(i) for i in [0, n) on `threads` workers; fn must write only slot i.
template <typename Fn>
void ParallelFor(int n, int threads, Fn fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (int w = 0; w < std::min(threads, n); ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        if (failed) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string Num(double x) {
  std::ostringstream s;
  s << std::setprecision(10) << x;
  return s.str();
}

json KalmanToJson(const KalmanState& k) {
  return {{"format", "dronecatch-kalman"},
          {"version", 1},
          {"transition_drift", Vec3ToJson(k.transition_drift)},
          {"process_variance", Vec3ToJson(k.process_variance)},
          {"measurement_variance", k.measurement_variance}};
}

KalmanState KalmanFromJson(const json& j) {
  KalmanState k;
  k.transition_drift = Vec3FromJson(j.at("transition_drift"));
  k.process_variance = Vec3FromJson(j.at("process_variance"));
  k.measurement_variance = j.at("measurement_variance").get<double>();
  return k;
}

}  // namespace

void BenchmarkSpec::Validate() const {
  if (train_episodes < 1 || val_episodes < 1 || test_episodes < 1 || repeats < 1 || threads < 1) {
    throw Error(ErrorKind::kInvalidArgument, "dataset counts, repeats and threads must be >= 1");
  }
  for (double f : mobility) {
    if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "mobility outside (0, 1]");
  }
  for (double s : movement_noise) {
    if (!(s >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "negative movement noise");
  }
  for (int n : n_list) {
    if (n < 1) throw Error(ErrorKind::kInvalidArgument, "N must be >= 1");
  }
  for (int h : horizons) {
    if (h < 1) throw Error(ErrorKind::kInvalidArgument, "horizon must be >= 1");
  }
  base.Validate();
}

json BenchmarkSpecToJson(const BenchmarkSpec& spec) {
  json cams = json::array();
  for (CameraMode c : spec.cameras) cams.push_back(CameraModeName(c));
  json catalog = json::array();
  for (const ObjectSpec& o : spec.catalog) {
    catalog.push_back({{"id", o.id}, {"mass", o.mass}, {"bounciness", o.bounciness},
                       {"drag", o.drag}, {"angular_drag", o.angular_drag}, {"radius", o.radius}});
  }
  return {{"train_episodes", spec.train_episodes},
          {"val_episodes", spec.val_episodes},
          {"test_episodes", spec.test_episodes},
          {"repeats", spec.repeats},
          {"seed", spec.seed},
          {"threads", spec.threads},
          {"catalog", catalog},
          {"held_out_objects", spec.held_out_objects},
          {"base", EpisodeConfigToJson(spec.base)},
          {"n_list", spec.n_list},
          {"mobility", spec.mobility},
          {"movement_noise", spec.movement_noise},
          {"horizons", spec.horizons},
          {"cameras", cams}};
}

BenchmarkSpec BenchmarkSpecFromJson(const json& j, BenchmarkSpec spec) {
  try {
    auto assign = [&](const char* key, auto& out) {
      if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
    };
    assign("train_episodes", spec.train_episodes);
    assign("val_episodes", spec.val_episodes);
    assign("test_episodes", spec.test_episodes);
    assign("repeats", spec.repeats);
    assign("seed", spec.seed);
    assign("threads", spec.threads);
    assign("held_out_objects", spec.held_out_objects);
    assign("n_list", spec.n_list);
    assign("mobility", spec.mobility);
    assign("movement_noise", spec.movement_noise);
    assign("horizons", spec.horizons);
    if (j.contains("catalog")) {
      spec.catalog.clear();
      for (const json& o : j.at("catalog")) {
        ObjectSpec s;
        s.id = o.at("id").get<std::string>();
        s.mass = o.at("mass").get<double>();
        s.bounciness = o.at("bounciness").get<double>();
        s.drag = o.at("drag").get<double>();
        s.angular_drag = o.value("angular_drag", 0.0);
        s.radius = o.at("radius").get<double>();
        spec.catalog.push_back(s);
      }
    }
    if (j.contains("base")) spec.base = EpisodeConfigFromJson(j.at("base"), spec.base);
    if (j.contains("cameras")) {
      spec.cameras.clear();
      for (const json& c : j.at("cameras")) spec.cameras.push_back(ParseCameraMode(c.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("benchmark spec: ") + e.what());
  }
  return spec;
}

Split MakeSplit(std::span<const EpisodeConfig> episodes) {
  Split split;
  split.episodes.assign(episodes.begin(), episodes.end());
  for (const EpisodeConfig& cfg : episodes) {
    Spawn sp = SpawnEpisode(cfg);
    Trajectory traj =
        SimulateTrajectory(cfg.object, sp.object, cfg.room, cfg.sim, cfg.max_control_steps);
    std::vector<Vec3> track;
    track.reserve(traj.states.size());
    for (const ObjectState& s : traj.states) track.push_back(s.o - sp.agent.d);
    split.reference_collisions.push_back(traj.collision_count);
    split.reference_terminal.push_back(traj.terminal);
    split.reference_tracks.push_back(std::move(track));
  }
  return split;
}

Dataset GenerateDataset(const BenchmarkSpec& spec) {
  spec.Validate();
  std::vector<ObjectSpec> catalog = spec.catalog.empty() ? DefaultCatalog() : spec.catalog;
  std::vector<ObjectSpec> seen;
  for (const ObjectSpec& o : catalog) {
    bool held = std::find(spec.held_out_objects.begin(), spec.held_out_objects.end(), o.id) !=
                spec.held_out_objects.end();
    if (!held) seen.push_back(o);
  }
  if (seen.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "every catalog object is held out");

  auto build = [&](uint64_t stream, int count, const std::vector<ObjectSpec>& objects) {
    std::vector<EpisodeConfig> eps;
    eps.reserve(count);
    const uint64_t base_seed = DeriveSeed(spec.seed, stream);
    for (int i = 0; i < count; ++i) {
      EpisodeConfig cfg = spec.base;
      cfg.seed = DeriveSeed(base_seed, static_cast<uint64_t>(i));
      cfg.object = objects[i % objects.size()];
      eps.push_back(std::move(cfg));
    }
    return MakeSplit(eps);
  };
  Dataset data;
  data.train = build(kTrainSplit, spec.train_episodes, seen);
  data.val = build(kValSplit, spec.val_episodes, seen);
  data.test = build(kTestSplit, spec.test_episodes, catalog);
  return data;
}

double DifficultyProportions::percent(int d) const {
  int total = counts[0] + counts[1] + counts[2];
  return total == 0 ? 0.0 : 100.0 * counts[d] / total;
}

DifficultyProportions Proportions(const Split& split) {
  DifficultyProportions p;
  for (int c : split.reference_collisions) ++p.counts[static_cast<int>(ClassifyDifficulty(c))];
  return p;
}

void SaveDataset(const Dataset& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream props;
  props << "split,episodes,easy_pct,medium_pct,difficult_pct\n";
  for (const auto& [name, split] : {std::pair<std::string, const Split*>{"train", &data.train},
                                    {"val", &data.val},
                                    {"test", &data.test}}) {
    std::ostringstream configs;
    std::ostringstream refs;
    refs << "episode,seed,object,collisions,terminal,steps\n";
    for (size_t i = 0; i < split->episodes.size(); ++i) {
      configs << EpisodeConfigToJson(split->episodes[i]).dump() << '\n';
      refs << i << ',' << split->episodes[i].seed << ',' << split->episodes[i].object.id << ','
           << split->reference_collisions[i] << ','
           << TerminalName(split->reference_terminal[i]) << ','
           << split->reference_tracks[i].size() - 1 << '\n';
    }
    WriteTextFile(dir + "/configs_" + name + ".jsonl", configs.str());
    WriteTextFile(dir + "/reference_" + name + ".csv", refs.str());
    DifficultyProportions p = Proportions(*split);
    props << name << ',' << split->episodes.size() << ',' << Num(p.percent(0)) << ','
          << Num(p.percent(1)) << ',' << Num(p.percent(2)) << '\n';
  }
  WriteTextFile(dir + "/proportions.csv", props.str());
}

PlannerConfig MethodSpec::Planner() const {
  PlannerConfig cfg = MethodPlannerConfig(method, n_samples, horizon);
  if (sampler) cfg.sampler = *sampler;
  if (forecast_mode) cfg.forecast_mode = *forecast_mode;
  return cfg;
}

std::string MethodSpec::Label() const {
  std::ostringstream s;
  s << MethodName(method) << "/N=" << n_samples << "/H=" << horizon << "/mob=" << mobility
    << "/noise=" << movement_noise << "/cam=" << CameraModeName(camera);
  if (sampler) s << "/sampler=" << SamplerKindName(*sampler);
  if (forecast_mode) s << "/forecast=" << ForecastModeName(*forecast_mode);
  return s.str();
}

double CellMetrics::DifficultySuccess(int d) const {
  return difficulty_episodes[d] == 0 ? 0.0
                                     : 100.0 * difficulty_caught[d] / difficulty_episodes[d];
}

Models ModelStore::View() const {
  Models m;
  if (estimator) m.estimator = &*estimator;
  if (kalman) m.kalman = &*kalman;
  if (policy) m.policy = &*policy;
  if (model_free) m.model_free = &*model_free;
  return m;
}

void ModelStore::Save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  if (estimator) SaveJson(dir + "/estimator.json", estimator->ToJson());
  if (kalman) SaveJson(dir + "/kalman.json", KalmanToJson(*kalman));
  if (policy) SaveJson(dir + "/policy.json", policy->ToJson());
  if (model_free) SaveJson(dir + "/model_free.json", model_free->ToJson());
}

ModelStore ModelStore::Load(const std::string& dir) {
  ModelStore m;
  auto exists = [&](const char* name) { return std::filesystem::exists(dir + "/" + name); };
  if (exists("estimator.json")) m.estimator = LearnedEstimator::FromJson(LoadJson(dir + "/estimator.json"));
  if (exists("kalman.json")) m.kalman = KalmanFromJson(LoadJson(dir + "/kalman.json"));
  if (exists("policy.json")) m.policy = GaussianPolicy::FromJson(LoadJson(dir + "/policy.json"));
  if (exists("model_free.json")) {
    m.model_free = GaussianPolicy::FromJson(LoadJson(dir + "/model_free.json"));
  }
  return m;
}

CellMetrics RunBenchmark(const Split& split, const ModelStore& models, const MethodSpec& method,
                         const RunOptions& options, std::vector<EpisodeRecord>* records) {
  if (split.episodes.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "no episodes to run");
  if (options.repeats < 1) throw Error(ErrorKind::kInvalidArgument, "repeats must be >= 1");
  const PlannerConfig planner = method.Planner();
  if (method.method != Method::kModelFree && planner.sampler == SamplerKind::kPolicy &&
      !models.policy) {
    throw Error(ErrorKind::kMissingCheckpoint, "policy sampler needs policy.json");
  }
  if (method.method == Method::kModelFree && !models.model_free) {
    throw Error(ErrorKind::kMissingCheckpoint, "model-free method needs model_free.json");
  }
  if (planner.forecast_mode == ForecastMode::kKalmanStatic && !models.kalman) {
    throw Error(ErrorKind::kMissingCheckpoint, "CPP+Kalman needs kalman.json");
  }
  const Models view = models.View();
  const int n = static_cast<int>(split.episodes.size());

  CellMetrics cell;
  cell.spec = method;
  cell.episodes = n;
  Accumulator pos, vel, acc, vel_si, acc_si;
  double reward_sum = 0.0;
  for (int rep = 0; rep < options.repeats; ++rep) {
    const uint64_t rep_seed = DeriveSeed(options.seed, 1000 + static_cast<uint64_t>(rep));
    std::vector<EpisodeResult> results(n);
    std::vector<EpisodeRecord> kept(records != nullptr ? n : 0);
    ParallelFor(n, options.threads, [&](int i) {
      EpisodeConfig cfg = split.episodes[i];
      cfg.drone = WithMobility(cfg.drone, method.mobility);
      cfg.drone.movement_noise_sigma = method.movement_noise;
      cfg.camera = method.camera;
      MethodController controller(method.method, planner, view);
      EpisodeRecord rec = RunEpisode(cfg, controller, DeriveSeed(rep_seed, i));
      results[i] = Summarize(rec, split.reference_tracks[i], split.reference_collisions[i],
                             cfg.sim.control_dt);
      if (records != nullptr) kept[i] = std::move(rec);
    });
    int caught = 0;
    const double dt = split.episodes.front().sim.control_dt;
    for (const EpisodeResult& r : results) {
      caught += r.caught;
      ++cell.difficulty_episodes[r.difficulty];
      cell.difficulty_caught[r.difficulty] += r.caught;
      reward_sum += r.reward;
      for (double e : r.position_err) pos.Add(e);
      for (double e : r.velocity_err) {
        vel.Add(e);
        vel_si.Add(e / dt);
      }
      for (double e : r.acceleration_err) {
        acc.Add(e);
        acc_si.Add(e / (dt * dt));
      }
    }
    cell.success_per_repeat.push_back(100.0 * caught / n);
    if (records != nullptr) {
      for (EpisodeRecord& r : kept) records->push_back(std::move(r));
    }
  }
  Accumulator succ;
  for (double s : cell.success_per_repeat) succ.Add(s);
  cell.success_mean = succ.Stat().mean;
  cell.success_std = succ.Stat().std;
  cell.mean_reward = reward_sum / (static_cast<double>(n) * options.repeats);
  cell.errors.position = pos.Stat();
  cell.errors.velocity_step = vel.Stat();
  cell.errors.acceleration_step = acc.Stat();
  cell.errors.velocity_si = vel_si.Stat();
  cell.errors.acceleration_si = acc_si.Stat();
  return cell;
}

const char* SweepAxisName(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNSamples: return "n_samples";
    case SweepAxis::kMobility: return "mobility";
    case SweepAxis::kNoise: return "noise";
    case SweepAxis::kHorizon: return "horizon";
    case SweepAxis::kCamera: return "camera";
  }
  return "?";
}

SweepAxis ParseSweepAxis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::kNSamples, SweepAxis::kMobility, SweepAxis::kNoise,
                      SweepAxis::kHorizon, SweepAxis::kCamera}) {
    if (name == SweepAxisName(a)) return a;
  }
  if (name == "n" || name == "N") return SweepAxis::kNSamples;
  throw Error(ErrorKind::kInvalidArgument, "unknown sweep axis '" + name + "'");
}

std::vector<MethodSpec> SweepPoints(const BenchmarkSpec& spec, SweepAxis axis,
                                    const MethodSpec& base) {
  std::vector<MethodSpec> points;
  auto add = [&](auto mutate) {
    MethodSpec m = base;
    mutate(m);
    points.push_back(m);
  };
  switch (axis) {
    case SweepAxis::kNSamples:
      for (int n : spec.n_list) add([&](MethodSpec& m) { m.n_samples = n; });
      break;
    case SweepAxis::kMobility:
      for (double f : spec.mobility) add([&](MethodSpec& m) { m.mobility = f; });
      break;
    case SweepAxis::kNoise:
      for (double s : spec.movement_noise) add([&](MethodSpec& m) { m.movement_noise = s; });
      break;
    case SweepAxis::kHorizon:
      for (int h : spec.horizons) add([&](MethodSpec& m) { m.horizon = h; });
      break;
    case SweepAxis::kCamera:
      for (CameraMode c : spec.cameras) add([&](MethodSpec& m) { m.camera = c; });
      break;
  }
  return points;
}

MetricsTable RunSweep(const Split& split, const ModelStore& models,
                      std::span<const MethodSpec> points, const RunOptions& options,
                      const std::function<void(const CellMetrics&)>& progress) {
  MetricsTable table;
  for (const MethodSpec& p : points) {
    table.push_back(RunBenchmark(split, models, p, options));
    if (progress) progress(table.back());
  }
  return table;
}

double PooledStd(const CellMetrics& a, const CellMetrics& b) {
  return std::sqrt(0.5 * (a.success_std * a.success_std + b.success_std * b.success_std));
}

bool ClearlyGreater(const CellMetrics& a, const CellMetrics& b) {
  return a.success_mean - b.success_mean > PooledStd(a, b);
}

bool NotWorse(const CellMetrics& a, const CellMetrics& b) {
  return a.success_mean >= b.success_mean - PooledStd(a, b);
}

std::string MetricsCsv(const MetricsTable& table) {
  std::ostringstream out;
  out << "method,n_samples,horizon,mobility,movement_noise,camera,episodes,repeats,"
         "success_mean,success_std,success_per_repeat,easy,medium,difficult,mean_reward\n";
  for (const CellMetrics& c : table) {
    out << MethodName(c.spec.method) << ',' << c.spec.n_samples << ',' << c.spec.horizon << ','
        << Num(c.spec.mobility) << ',' << Num(c.spec.movement_noise) << ','
        << CameraModeName(c.spec.camera) << ',' << c.episodes << ','
        << c.success_per_repeat.size() << ',' << Num(c.success_mean) << ','
        << Num(c.success_std) << ',';
    for (size_t i = 0; i < c.success_per_repeat.size(); ++i) {
      out << (i ? ";" : "") << Num(c.success_per_repeat[i]);
    }
    out << ',' << Num(c.DifficultySuccess(0)) << ',' << Num(c.DifficultySuccess(1)) << ','
        << Num(c.DifficultySuccess(2)) << ',' << Num(c.mean_reward) << '\n';
  }
  return out.str();
}

std::string ErrorsCsv(const MetricsTable& table) {
  std::ostringstream out;
  out << "method,n_samples,position_m,position_std,velocity_m_per_step,velocity_std,"
         "acceleration_m_per_step2,acceleration_std,velocity_m_per_s,acceleration_m_per_s2\n";
  for (const CellMetrics& c : table) {
    const ForecastErrors& e = c.errors;
    out << MethodName(c.spec.method) << ',' << c.spec.n_samples << ',' << Num(e.position.mean)
        << ',' << Num(e.position.std) << ',' << Num(e.velocity_step.mean) << ','
        << Num(e.velocity_step.std) << ',' << Num(e.acceleration_step.mean) << ','
        << Num(e.acceleration_step.std) << ',' << Num(e.velocity_si.mean) << ','
        << Num(e.acceleration_si.mean) << '\n';
  }
  return out.str();
}

std::string DifficultyCsv(const MetricsTable& table) {
  std::ostringstream out;
  out << "method,difficulty,episodes,caught,success\n";
  for (const CellMetrics& c : table) {
    for (int d = 0; d < 3; ++d) {
      out << MethodName(c.spec.method) << ',' << DifficultyName(static_cast<Difficulty>(d)) << ','
          << c.difficulty_episodes[d] << ',' << c.difficulty_caught[d] << ','
          << Num(c.DifficultySuccess(d)) << '\n';
    }
  }
  return out.str();
}

std::vector<std::vector<Vec3>> TrainingTracks(const Split& split) { return split.reference_tracks; }

LearnedEstimator TrainForecaster(const Split& train, const EstimatorTrainConfig& cfg,
                                 double sigma_obs, TrainCurve* curve) {
  if (train.episodes.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "empty training split");
  const double dt = train.episodes.front().sim.control_dt;
  Rng rng(DeriveSeed(cfg.seed, 5));
  std::vector<EstimatorExample> examples =
      MakeEstimatorExamples(train.reference_tracks, dt, sigma_obs, rng);
  return TrainEstimator(examples, cfg, dt, curve);
}

PolicyTrainResult TrainPolicyOnSplit(const Split& train, const ModelStore& models,
                                     const PolicyTrainConfig& cfg, bool model_free,
                                     const std::function<void(const TrainPoint&)>& progress) {
  std::vector<bool> easy_vec;
  for (int c : train.reference_collisions) easy_vec.push_back(c == 0);
  std::unique_ptr<bool[]> easy(new bool[easy_vec.size()]);
  for (size_t i = 0; i < easy_vec.size(); ++i) easy[i] = easy_vec[i];
  return TrainPolicy(train.episodes, std::span<const bool>(easy.get(), easy_vec.size()),
                     models.View(), cfg, model_free, progress);
}

}  // namespace dronecatch
