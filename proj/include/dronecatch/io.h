#ifndef DRONECATCH_IO_H_
#define DRONECATCH_IO_H_

#include <span>
#include <string>
#include <vector>

#include "dronecatch/environment.h"
#include "json.hpp"

namespace dronecatch {

nlohmann::json Vec3ToJson(const Vec3& v);
Vec3 Vec3FromJson(const nlohmann::json& j);

nlohmann::json EpisodeConfigToJson(const EpisodeConfig& cfg);
// Missing keys keep the defaults of `base`.
EpisodeConfig EpisodeConfigFromJson(const nlohmann::json& j, EpisodeConfig base = {});

nlohmann::json RecordToJson(const EpisodeRecord& record);  // summary fields only
nlohmann::json StepToJson(const StepLog& step);
StepLog StepFromJson(const nlohmann::json& j);

// Line-delimited trajectory log, format "dronecatch-trajectories" v1:
//   line 1: {"format": ..., "version": 1, "episodes": n}
//   per episode: one {"type": "episode", ...} line followed by one
//   {"type": "step", ...} line per logged step.
void ExportTrajectories(std::span<const EpisodeRecord> records, const std::string& path);
std::vector<EpisodeRecord> ImportTrajectories(const std::string& path);

// Per-episode summary table (CSV with a header row).
void ExportSummaryCsv(std::span<const EpisodeRecord> records, const std::string& path);

std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& text);

}  // namespace dronecatch

#endif  // DRONECATCH_IO_H_
