#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fastgate/pipeline.hpp"

namespace fastgate {

using Json = nlohmann::json;

void to_json(Json& j, const TrapConfiguration& v);
void from_json(const Json& j, TrapConfiguration& v);
void to_json(Json& j, const ModeStructure& v);
void from_json(const Json& j, ModeStructure& v);
void to_json(Json& j, const SchemeSpec& v);
void from_json(const Json& j, SchemeSpec& v);
void to_json(Json& j, const PulseSequence& v);
void from_json(const Json& j, PulseSequence& v);
void to_json(Json& j, const InfidelityBreakdown& v);
void from_json(const Json& j, InfidelityBreakdown& v);
void to_json(Json& j, const SearchMetadata& v);
void from_json(const Json& j, SearchMetadata& v);
void to_json(Json& j, const GateSolution& v);
void from_json(const Json& j, GateSolution& v);
void to_json(Json& j, const StageRecord& v);
void from_json(const Json& j, StageRecord& v);
void to_json(Json& j, const GlobalSearchConfig& v);
void from_json(const Json& j, GlobalSearchConfig& v);
void to_json(Json& j, const SimulationOptions& v);
void from_json(const Json& j, SimulationOptions& v);
void to_json(Json& j, const LocalSearchConfig& v);
void from_json(const Json& j, LocalSearchConfig& v);
void to_json(Json& j, const OdeInfidelity& v);
void from_json(const Json& j, OdeInfidelity& v);
void to_json(Json& j, const RefinementStep& v);
void from_json(const Json& j, RefinementStep& v);
void to_json(Json& j, const BudgetTable& v);
void from_json(const Json& j, BudgetTable& v);
void to_json(Json& j, const RunManifest& v);
void from_json(const Json& j, RunManifest& v);
void to_json(Json& j, const RateResult& v);
void from_json(const Json& j, RateResult& v);
void to_json(Json& j, const ResultRecord& v);
void from_json(const Json& j, ResultRecord& v);

/// Canonical text form: two-space indentation, sorted keys, trailing newline.
std::string dump(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

RunManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

GateSolution read_solution(const std::filesystem::path& path);
void write_solution(const std::filesystem::path& path, const GateSolution& solution);

/// Recomputes stored infidelities from the stored sequences; throws IoError on a
/// relative mismatch above `tolerance`.
void verify_record(const ResultRecord& record, double tolerance = 1e-10);

ResultRecord read_record(const std::filesystem::path& path, bool verify = true);
void write_record(const std::filesystem::path& path, const ResultRecord& record);

/// One JSON object per line: global stages, then local refinement steps.
std::string search_log(const ResultRecord& record);

/// Rows of t, x1, x2, v1, v2, phase, then (Re, Im) of each mode's rotating-frame amplitude.
std::vector<std::vector<double>> trajectory_table(const TrajectorySet& set, const ModeStructure& modes,
                                                  BasisState basis);
std::vector<std::string> trajectory_columns(const ModeStructure& modes);

/// Writes basis_00.csv .. basis_11.csv into `directory`; requires recorded histories.
void export_trajectories(const TrajectorySet& set, const ModeStructure& modes,
                         const std::filesystem::path& directory);

}  // namespace fastgate
