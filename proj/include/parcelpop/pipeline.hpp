#pragma once

// Stage orchestration. Stages exchange data through files in the output
// directory so each can be rerun on its own.

#include "parcelpop/config.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace parcelpop {

// Names in execution order.
inline const std::vector<std::string> kStages = {
    "parcelize", "features", "calibrate", "ca", "allocate", "synthesize", "validate"};

// A stage failed; `input_error` tells whether the cause was bad input.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what, bool input_error)
        : std::runtime_error("stage '" + stage + "' failed: " + what),
          stage_(std::move(stage)), input_error_(input_error) {}

    const std::string& stage() const { return stage_; }
    bool input_error() const { return input_error_; }

private:
    std::string stage_;
    bool input_error_;
};

struct StageResult {
    std::string name;
    std::vector<std::string> outputs;   // file names relative to out_dir
    double seconds = 0;
    nlohmann::json summary;
};

// Throws InputError naming the stage whose inputs are missing.
void check_stage_inputs(const Config& cfg, const std::string& stage);

StageResult run_stage(const Config& cfg, const std::string& stage, const std::string& out_dir);

struct PipelineResult {
    std::vector<StageResult> stages;
    nlohmann::json manifest;
};

// All stages in order plus manifest.json. A failing stage aborts the run;
// files already written stay in place.
PipelineResult run_pipeline(const Config& cfg, const std::string& out_dir);

// Manifest content hash: everything except timings and thread count.
std::string manifest_digest(const nlohmann::json& manifest);

std::string sha256_file(const std::string& path);

// Symbology-ready GeoJSON for a stage output: "parcels", "features", "ca",
// "allocation" or "agents". For "ca" with snapshots, one file per logged
// iteration is written next to `path`. Returns the files written.
std::vector<std::string> emit_map(const std::string& stage, const std::string& out_dir,
                                  const std::string& path);

} // namespace parcelpop
