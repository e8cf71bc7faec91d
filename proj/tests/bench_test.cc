#include "dronecatch/bench.h"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "dronecatch/catalog.h"
#include "dronecatch/error.h"
#include "dronecatch/io.h"

namespace dronecatch {
namespace {

BenchmarkSpec SmallSpec() {
  BenchmarkSpec spec;
  spec.train_episodes = 24;
  spec.val_episodes = 6;
  spec.test_episodes = 12;
  spec.seed = 77;
  return spec;
}

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("dronecatch_" + name)).string();
}

CellMetrics Cell(std::vector<double> per_repeat) {
  CellMetrics c;
  c.success_per_repeat = per_repeat;
  double m = 0.0;
  for (double v : per_repeat) m += v / per_repeat.size();
  double s = 0.0;
  for (double v : per_repeat) s += (v - m) * (v - m) / (per_repeat.size() - 1);
  c.success_mean = m;
  c.success_std = std::sqrt(s);
  return c;
}

TEST(DatasetTest, CountsAndCatalogBalance) {
  Dataset d = GenerateDataset(SmallSpec());
  EXPECT_EQ(d.train.episodes.size(), 24u);
  EXPECT_EQ(d.val.episodes.size(), 6u);
  EXPECT_EQ(d.test.episodes.size(), 12u);
  EXPECT_EQ(d.train.reference_collisions.size(), 24u);
  EXPECT_EQ(d.train.reference_tracks.size(), 24u);
  std::map<std::string, int> per_object;
  for (const EpisodeConfig& e : d.train.episodes) ++per_object[e.object.id];
  EXPECT_EQ(per_object.size(), DefaultCatalog().size());
  int lo = 1 << 30, hi = 0;
  for (const auto& [id, n] : per_object) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  EXPECT_LE(hi - lo, 1);
}

TEST(DatasetTest, SplitSeedsAreDisjoint) {
  Dataset d = GenerateDataset(SmallSpec());
  std::set<uint64_t> seen;
  for (const Split* s : {&d.train, &d.val, &d.test})
    for (const EpisodeConfig& e : s->episodes) EXPECT_TRUE(seen.insert(e.seed).second);
}

TEST(DatasetTest, Deterministic) {
  Dataset a = GenerateDataset(SmallSpec());
  Dataset b = GenerateDataset(SmallSpec());
  ASSERT_EQ(a.test.episodes.size(), b.test.episodes.size());
  for (size_t i = 0; i < a.test.episodes.size(); ++i) {
    EXPECT_EQ(a.test.episodes[i].seed, b.test.episodes[i].seed);
    EXPECT_EQ(a.test.reference_tracks[i], b.test.reference_tracks[i]);
  }
}

TEST(DatasetTest, HeldOutObjectsOnlyInTest) {
  BenchmarkSpec spec = SmallSpec();
  std::string held = DefaultCatalog().front().id;
  spec.held_out_objects = {held};
  Dataset d = GenerateDataset(spec);
  for (const EpisodeConfig& e : d.train.episodes) EXPECT_NE(e.object.id, held);
  for (const EpisodeConfig& e : d.val.episodes) EXPECT_NE(e.object.id, held);
  bool found = false;
  for (const EpisodeConfig& e : d.test.episodes) found |= e.object.id == held;
  EXPECT_TRUE(found);
}

TEST(DatasetTest, ProportionsCoverSplit) {
  Dataset d = GenerateDataset(SmallSpec());
  DifficultyProportions p = Proportions(d.train);
  EXPECT_EQ(p.counts[0] + p.counts[1] + p.counts[2], 24);
  EXPECT_NEAR(p.percent(0) + p.percent(1) + p.percent(2), 100.0, 1e-9);
  for (size_t i = 0; i < d.train.episodes.size(); ++i) {
    int c = d.train.reference_collisions[i];
    Difficulty k = ClassifyDifficulty(c);
    EXPECT_EQ(k, c == 0 ? Difficulty::kEasy : c == 1 ? Difficulty::kMedium : Difficulty::kDifficult);
  }
}

TEST(BenchmarkSpecTest, JsonRoundTrip) {
  BenchmarkSpec spec = SmallSpec();
  spec.n_list = {5, 50};
  BenchmarkSpec back = BenchmarkSpecFromJson(nlohmann::json::parse(BenchmarkSpecToJson(spec).dump()));
  EXPECT_EQ(back.train_episodes, 24);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.n_list, spec.n_list);
  EXPECT_EQ(back.cameras, spec.cameras);
}

TEST(StatsTest, PooledStdAndOrderings) {
  CellMetrics a = Cell({30, 32, 34});  // std 2
  CellMetrics b = Cell({20, 24, 28});  // std 4
  EXPECT_NEAR(PooledStd(a, b), std::sqrt((4.0 + 16.0) / 2), 1e-12);
  EXPECT_TRUE(ClearlyGreater(a, b));
  EXPECT_FALSE(ClearlyGreater(b, a));
  EXPECT_TRUE(NotWorse(a, b));
  EXPECT_FALSE(NotWorse(b, a));
  CellMetrics c = Cell({29, 31, 33});
  EXPECT_FALSE(ClearlyGreater(a, c));
  EXPECT_TRUE(NotWorse(c, a));
}

TEST(RunBenchmarkTest, ThreadCountDoesNotChangeResults) {
  Dataset d = GenerateDataset(SmallSpec());
  MethodSpec m;
  m.method = Method::kUniformAs;
  m.n_samples = 50;
  m.movement_noise = 0.05;
  RunOptions opt;
  opt.repeats = 2;
  CellMetrics one = RunBenchmark(d.test, ModelStore{}, m, opt);
  opt.threads = 3;
  CellMetrics three = RunBenchmark(d.test, ModelStore{}, m, opt);
  EXPECT_EQ(one.success_per_repeat, three.success_per_repeat);
  EXPECT_EQ(one.mean_reward, three.mean_reward);
  EXPECT_EQ(one.errors.position.mean, three.errors.position.mean);
  EXPECT_EQ(MetricsCsv({one}), MetricsCsv({three}));
}

TEST(RunBenchmarkTest, DifficultyTalliesMatchEpisodes) {
  Dataset d = GenerateDataset(SmallSpec());
  MethodSpec m;
  m.method = Method::kOracle;
  m.n_samples = 50;
  RunOptions opt;
  opt.repeats = 2;
  std::vector<EpisodeRecord> records;
  CellMetrics c = RunBenchmark(d.test, ModelStore{}, m, opt, &records);
  EXPECT_EQ(c.episodes, 12);
  EXPECT_EQ(c.difficulty_episodes[0] + c.difficulty_episodes[1] + c.difficulty_episodes[2], 24);
  ASSERT_EQ(records.size(), 24u);
  int caught = 0;
  for (const EpisodeRecord& r : records) caught += r.outcome == Outcome::kCaught;
  EXPECT_EQ(c.difficulty_caught[0] + c.difficulty_caught[1] + c.difficulty_caught[2], caught);
  EXPECT_NEAR(c.success_mean, 100.0 * caught / 24, 1e-9);
}

TEST(SweepTest, PointsFollowSpec) {
  BenchmarkSpec spec;
  MethodSpec base;
  base.method = Method::kUniformAs;
  std::vector<MethodSpec> n = SweepPoints(spec, SweepAxis::kNSamples, base);
  ASSERT_EQ(n.size(), spec.n_list.size());
  for (size_t i = 0; i < n.size(); ++i) EXPECT_EQ(n[i].n_samples, spec.n_list[i]);
  std::vector<MethodSpec> mob = SweepPoints(spec, SweepAxis::kMobility, base);
  ASSERT_EQ(mob.size(), spec.mobility.size());
  EXPECT_EQ(mob.back().mobility, 0.2);
  std::vector<MethodSpec> cam = SweepPoints(spec, SweepAxis::kCamera, base);
  EXPECT_EQ(cam.size(), 3u);
  EXPECT_EQ(ParseSweepAxis(SweepAxisName(SweepAxis::kHorizon)), SweepAxis::kHorizon);
}

TEST(ExportTest, RoundTripAndCatchOnLastLine) {
  Dataset d = GenerateDataset(SmallSpec());
  MethodSpec m;
  m.method = Method::kOracle;
  m.n_samples = 200;
  RunOptions opt;
  opt.repeats = 1;
  std::vector<EpisodeRecord> records;
  RunBenchmark(d.test, ModelStore{}, m, opt, &records);
  std::string path = TempPath("export.jsonl");
  ExportTrajectories(records, path);
  std::vector<EpisodeRecord> back = ImportTrajectories(path);
  ASSERT_EQ(back.size(), records.size());
  DroneSpec drone;
  int caught = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(back[i].seed, records[i].seed);
    EXPECT_EQ(back[i].outcome, records[i].outcome);
    ASSERT_EQ(back[i].steps.size(), records[i].steps.size());
    for (size_t k = 0; k < records[i].steps.size(); ++k) {
      EXPECT_EQ(back[i].steps[k].agent.d, records[i].steps[k].agent.d);
      EXPECT_EQ(back[i].steps[k].object.o, records[i].steps[k].object.o);
    }
    if (back[i].outcome == Outcome::kCaught) {
      ++caught;
      const StepLog& last = back[i].steps.back();
      EXPECT_TRUE(CheckCatch(last.agent.d, last.object.o, drone));
    }
  }
  EXPECT_GT(caught, 0);
  std::filesystem::remove(path);
}

TEST(ExportTest, EmptyExportHasHeaderOnly) {
  std::string path = TempPath("empty.jsonl");
  ExportTrajectories({}, path);
  std::istringstream in(ReadTextFile(path));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++lines;
    nlohmann::json j = nlohmann::json::parse(line);
    EXPECT_EQ(j["episodes"], 0);
  }
  EXPECT_EQ(lines, 1);
  EXPECT_TRUE(ImportTrajectories(path).empty());
  std::filesystem::remove(path);
}

TEST(ExportTest, SummaryCsvHasRowPerEpisode) {
  EpisodeRecord r;
  r.seed = 4;
  r.object_id = "ball";
  r.outcome = Outcome::kGround;
  std::vector<EpisodeRecord> records{r, r, r};
  std::string path = TempPath("summary.csv");
  ExportSummaryCsv(records, path);
  std::istringstream in(ReadTextFile(path));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) lines += !line.empty();
  EXPECT_EQ(lines, 4);
  std::filesystem::remove(path);
}

TEST(IoTest, EpisodeConfigRoundTrip) {
  Dataset d = GenerateDataset(SmallSpec());
  const EpisodeConfig& cfg = d.val.episodes[2];
  EpisodeConfig back = EpisodeConfigFromJson(nlohmann::json::parse(EpisodeConfigToJson(cfg).dump()));
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(back.object.id, cfg.object.id);
  EXPECT_EQ(back.object.mass, cfg.object.mass);
  EXPECT_EQ(back.camera, cfg.camera);
  Trajectory a = ReferenceTrajectory(cfg), b = ReferenceTrajectory(back);
  ASSERT_EQ(a.states.size(), b.states.size());
  EXPECT_EQ(a.states.back().o, b.states.back().o);
}

TEST(IoTest, MalformedImportThrows) {
  std::string path = TempPath("bad.jsonl");
  WriteTextFile(path, "{not json\n");
  EXPECT_THROW(ImportTrajectories(path), Error);
  std::filesystem::remove(path);
  EXPECT_THROW(ReadTextFile(TempPath("missing_file")), Error);
}

}  // namespace
}  // namespace dronecatch
