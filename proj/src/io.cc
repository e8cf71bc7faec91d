#include "dronecatch/io.h"

#include <fstream>
#include <sstream>

#include "dronecatch/error.h"

namespace dronecatch {
namespace {

using nlohmann::json;

constexpr const char* kTrajectoryFormat = "dronecatch-trajectories";
constexpr int kTrajectoryVersion = 1;

json RangeToJson(const Range& r) { return json::array({r.lo, r.hi}); }
Range RangeFromJson(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json StateToJson(const ObjectState& s) {
  return {{"o", Vec3ToJson(s.o)}, {"v", Vec3ToJson(s.v)}, {"a", Vec3ToJson(s.a)}};
}

ObjectState StateFromJson(const json& j) {
  return {Vec3FromJson(j.at("o")), Vec3FromJson(j.at("v")), Vec3FromJson(j.at("a"))};
}

json AgentToJson(const AgentState& s) {
  return {{"d", Vec3ToJson(s.d)}, {"v", Vec3ToJson(s.v)}, {"a", Vec3ToJson(s.a)},
          {"phi", s.phi},         {"theta", s.theta}};
}

AgentState AgentFromJson(const json& j) {
  AgentState s;
  s.d = Vec3FromJson(j.at("d"));
  s.v = Vec3FromJson(j.at("v"));
  s.a = Vec3FromJson(j.at("a"));
  s.phi = j.at("phi").get<double>();
  s.theta = j.at("theta").get<double>();
  return s;
}

json VectorToJson(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd VectorFromJson(const json& j) {
  std::vector<double> v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename T>
void Assign(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json Vec3ToJson(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 Vec3FromJson(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::kParse, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json EpisodeConfigToJson(const EpisodeConfig& cfg) {
  json obstacles = json::array();
  for (const Box& b : cfg.room.obstacles) {
    obstacles.push_back({{"min", Vec3ToJson(b.min)}, {"max", Vec3ToJson(b.max)}});
  }
  return {
      {"seed", cfg.seed},
      {"object",
       {{"id", cfg.object.id},
        {"mass", cfg.object.mass},
        {"bounciness", cfg.object.bounciness},
        {"drag", cfg.object.drag},
        {"angular_drag", cfg.object.angular_drag},
        {"radius", cfg.object.radius}}},
      {"room",
       {{"min_corner", Vec3ToJson(cfg.room.min_corner)},
        {"max_corner", Vec3ToJson(cfg.room.max_corner)},
        {"obstacles", obstacles}}},
      {"drone",
       {{"max_accel", cfg.drone.max_accel},
        {"max_velocity", cfg.drone.max_velocity},
        {"body_extent", Vec3ToJson(cfg.drone.body_extent)},
        {"basket_extent", Vec3ToJson(cfg.drone.basket_extent)},
        {"movement_noise_sigma", cfg.drone.movement_noise_sigma}}},
      {"launcher",
       {{"force", RangeToJson(cfg.launcher.force)},
        {"elevation_deg", RangeToJson(cfg.launcher.elevation_deg)},
        {"azimuth_deg", RangeToJson(cfg.launcher.azimuth_deg)},
        {"height", cfg.launcher.height},
        {"horizontal_distance", cfg.launcher.horizontal_distance},
        {"impulse_duration", cfg.launcher.impulse_duration},
        {"wall_margin", cfg.launcher.wall_margin}}},
      {"sim",
       {{"gravity", cfg.sim.gravity},
        {"control_dt", cfg.sim.control_dt},
        {"physics_substeps", cfg.sim.physics_substeps},
        {"rest_speed_epsilon", cfg.sim.rest_speed_epsilon},
        {"friction", cfg.sim.friction},
        {"continue_after_bounce", cfg.sim.continue_after_bounce}}},
      {"observation",
       {{"sigma_obs", cfg.observation.sigma_obs}, {"fov_deg", cfg.observation.fov_deg}}},
      {"camera", CameraModeName(cfg.camera)},
      {"agent_height", cfg.agent_height},
      {"max_control_steps", cfg.max_control_steps},
  };
}

EpisodeConfig EpisodeConfigFromJson(const json& j, EpisodeConfig cfg) {
  try {
    Assign(j, "seed", cfg.seed);
    if (j.contains("object")) {
      const json& o = j.at("object");
      Assign(o, "id", cfg.object.id);
      Assign(o, "mass", cfg.object.mass);
      Assign(o, "bounciness", cfg.object.bounciness);
      Assign(o, "drag", cfg.object.drag);
      Assign(o, "angular_drag", cfg.object.angular_drag);
      Assign(o, "radius", cfg.object.radius);
    }
    if (j.contains("room")) {
      const json& r = j.at("room");
      if (r.contains("min_corner")) cfg.room.min_corner = Vec3FromJson(r.at("min_corner"));
      if (r.contains("max_corner")) cfg.room.max_corner = Vec3FromJson(r.at("max_corner"));
      if (r.contains("obstacles")) {
        cfg.room.obstacles.clear();
        for (const json& b : r.at("obstacles")) {
          cfg.room.obstacles.push_back({Vec3FromJson(b.at("min")), Vec3FromJson(b.at("max"))});
        }
      }
    }
    if (j.contains("drone")) {
      const json& d = j.at("drone");
      Assign(d, "max_accel", cfg.drone.max_accel);
      Assign(d, "max_velocity", cfg.drone.max_velocity);
      if (d.contains("body_extent")) cfg.drone.body_extent = Vec3FromJson(d.at("body_extent"));
      if (d.contains("basket_extent")) cfg.drone.basket_extent = Vec3FromJson(d.at("basket_extent"));
      Assign(d, "movement_noise_sigma", cfg.drone.movement_noise_sigma);
    }
    if (j.contains("launcher")) {
      const json& l = j.at("launcher");
      if (l.contains("force")) cfg.launcher.force = RangeFromJson(l.at("force"));
      if (l.contains("elevation_deg")) cfg.launcher.elevation_deg = RangeFromJson(l.at("elevation_deg"));
      if (l.contains("azimuth_deg")) cfg.launcher.azimuth_deg = RangeFromJson(l.at("azimuth_deg"));
      Assign(l, "height", cfg.launcher.height);
      Assign(l, "horizontal_distance", cfg.launcher.horizontal_distance);
      Assign(l, "impulse_duration", cfg.launcher.impulse_duration);
      Assign(l, "wall_margin", cfg.launcher.wall_margin);
    }
    if (j.contains("sim")) {
      const json& s = j.at("sim");
      Assign(s, "gravity", cfg.sim.gravity);
      Assign(s, "control_dt", cfg.sim.control_dt);
      Assign(s, "physics_substeps", cfg.sim.physics_substeps);
      Assign(s, "rest_speed_epsilon", cfg.sim.rest_speed_epsilon);
      Assign(s, "friction", cfg.sim.friction);
      Assign(s, "continue_after_bounce", cfg.sim.continue_after_bounce);
    }
    if (j.contains("observation")) {
      Assign(j.at("observation"), "sigma_obs", cfg.observation.sigma_obs);
      Assign(j.at("observation"), "fov_deg", cfg.observation.fov_deg);
    }
    if (j.contains("camera")) cfg.camera = ParseCameraMode(j.at("camera").get<std::string>());
    Assign(j, "agent_height", cfg.agent_height);
    Assign(j, "max_control_steps", cfg.max_control_steps);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("episode config: ") + e.what());
  }
  return cfg;
}

json RecordToJson(const EpisodeRecord& r) {
  return {{"type", "episode"},
          {"seed", r.seed},
          {"run_seed", r.run_seed},
          {"object_id", r.object_id},
          {"frame_origin", Vec3ToJson(r.frame_origin)},
          {"outcome", OutcomeName(r.outcome)},
          {"collision_count", r.collision_count},
          {"ended_mid_step", r.ended_mid_step},
          {"reward", r.reward},
          {"steps", r.steps.size()}};
}

json StepToJson(const StepLog& s) {
  json j = {{"type", "step"},
            {"t", s.t},
            {"agent", AgentToJson(s.agent)},
            {"object", StateToJson(s.object)},
            {"obs", s.observation.pos ? Vec3ToJson(*s.observation.pos) : json(nullptr)},
            {"action", Vec3ToJson(s.action)},
            {"collided", s.collided}};
  if (s.estimate) j["estimate"] = StateToJson(*s.estimate);
  if (!s.forecast.empty()) {
    json f = json::array();
    for (const Vec3& p : s.forecast) f.push_back(Vec3ToJson(p));
    j["forecast"] = f;
  }
  if (s.trace) {
    j["trace"] = {{"features", VectorToJson(s.trace->features)},
                  {"draw", VectorToJson(s.trace->draw)}};
  }
  return j;
}

StepLog StepFromJson(const json& j) {
  StepLog s;
  s.t = j.at("t").get<int>();
  s.agent = AgentFromJson(j.at("agent"));
  s.object = StateFromJson(j.at("object"));
  s.observation.t = s.t;
  if (!j.at("obs").is_null()) s.observation.pos = Vec3FromJson(j.at("obs"));
  s.action = Vec3FromJson(j.at("action"));
  s.collided = j.at("collided").get<bool>();
  if (j.contains("estimate")) s.estimate = StateFromJson(j.at("estimate"));
  if (j.contains("forecast")) {
    for (const json& p : j.at("forecast")) s.forecast.push_back(Vec3FromJson(p));
  }
  if (j.contains("trace")) {
    s.trace = PolicyTrace{VectorFromJson(j.at("trace").at("features")),
                          VectorFromJson(j.at("trace").at("draw"))};
  }
  return s;
}

void ExportTrajectories(std::span<const EpisodeRecord> records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << json{{"format", kTrajectoryFormat},
              {"version", kTrajectoryVersion},
              {"episodes", records.size()}}
             .dump()
      << '\n';
  for (const EpisodeRecord& r : records) {
    out << RecordToJson(r).dump() << '\n';
    for (const StepLog& s : r.steps) out << StepToJson(s).dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path);
}

std::vector<EpisodeRecord> ImportTrajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::vector<EpisodeRecord> records;
  std::string line;
  int lineno = 0;
  try {
    if (!std::getline(in, line)) throw Error(ErrorKind::kParse, path + ": empty file");
    ++lineno;
    json header = json::parse(line);
    if (header.at("format").get<std::string>() != kTrajectoryFormat ||
        header.at("version").get<int>() != kTrajectoryVersion) {
      throw Error(ErrorKind::kParse, path + ": unsupported trajectory format");
    }
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "episode") {
        EpisodeRecord r;
        r.seed = j.at("seed").get<uint64_t>();
        r.run_seed = j.at("run_seed").get<uint64_t>();
        r.object_id = j.at("object_id").get<std::string>();
        r.frame_origin = Vec3FromJson(j.at("frame_origin"));
        r.outcome = ParseOutcome(j.at("outcome").get<std::string>());
        r.collision_count = j.at("collision_count").get<int>();
        r.ended_mid_step = j.at("ended_mid_step").get<bool>();
        r.reward = j.at("reward").get<double>();
        records.push_back(std::move(r));
      } else if (type == "step") {
        if (records.empty()) throw Error(ErrorKind::kParse, "step before any episode line");
        records.back().steps.push_back(StepFromJson(j));
      } else {
        throw Error(ErrorKind::kParse, "unknown line type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    std::ostringstream msg;
    msg << path << ":" << lineno << ": " << e.what();
    throw Error(ErrorKind::kParse, msg.str());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kParse) throw;
    std::ostringstream msg;
    msg << path << ":" << lineno << ": " << e.what();
    throw Error(ErrorKind::kParse, msg.str());
  }
  return records;
}

void ExportSummaryCsv(std::span<const EpisodeRecord> records, const std::string& path) {
  std::ostringstream out;
  out << "episode,seed,run_seed,object,outcome,collisions,difficulty,reward,steps\n";
  for (size_t i = 0; i < records.size(); ++i) {
    const EpisodeRecord& r = records[i];
    out << i << ',' << r.seed << ',' << r.run_seed << ',' << r.object_id << ','
        << OutcomeName(r.outcome) << ',' << r.collision_count << ','
        << DifficultyName(ClassifyDifficulty(r)) << ',' << json(r.reward).dump() << ','
        << r.steps.size() << '\n';
  }
  WriteTextFile(path, out.str());
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path);
}

}  // namespace dronecatch
