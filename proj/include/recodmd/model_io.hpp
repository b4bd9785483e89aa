#pragma once

// JSON model files (format "recodmd-model", version 1).
//
// Real matrices:    {"rows": R, "cols": C, "data": [row-major values]}
// Complex matrices: {"rows": R, "cols": C, "re": [...], "im": [...]}
// Complex vectors:  {"re": [...], "im": [...]}
//
// Doubles are written in shortest round-trip form, so save followed by load
// reproduces every value bit for bit.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "recodmd/pipeline.hpp"

namespace recodmd {

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DmdModel& m);
nlohmann::json to_json(const DmdcModel& m);
nlohmann::json to_json(const TrainedModel& m);

DmdModel dmd_from_json(const nlohmann::json& j);
DmdcModel dmdc_from_json(const nlohmann::json& j);
TrainedModel trained_model_from_json(const nlohmann::json& j);

/// Atomic write (temporary file + rename).
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// Writes `contents` to `path` through a temporary sibling and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace recodmd
