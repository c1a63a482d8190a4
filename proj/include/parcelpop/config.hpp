#pragma once

// Run configuration. JSON; unknown keys are rejected so misspelled
// threshold names fail loudly. Relative paths resolve against the config
// file's directory.

#include "parcelpop/allocator.hpp"
#include "parcelpop/ca_engine.hpp"
#include "parcelpop/calibrator.hpp"
#include "parcelpop/geodata.hpp"
#include "parcelpop/metrics.hpp"
#include "parcelpop/parcelizer.hpp"
#include "parcelpop/synthesizer.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace parcelpop {

struct InputPaths {
    std::optional<std::string> roads;
    std::optional<std::string> pois;
    std::optional<std::string> admin_units;
    std::optional<std::string> census;
    std::vector<std::string> constraints;
    std::optional<std::string> extent;
    std::optional<std::string> model;              // skips fitting when set
    std::optional<std::string> training_parcels;   // known urban polygons
    std::optional<std::string> reference_parcels;  // validation: urban ground truth
    std::optional<std::string> reference_residential;
    std::optional<std::string> regions;
    std::optional<std::string> buildings;          // points with floor_space
    std::optional<std::string> reference_agents;
};

struct RoadConfig {
    ClassWidthMap widths;
    double snap = kDefaultSnap;
    double trim_threshold = kDefaultTrimThreshold;
    double extension = kDefaultExtension;
    double min_parcel_area = kDefaultMinParcelArea;
    int circle_points = kCirclePoints;
    AdminAssignMode admin_mode = AdminAssignMode::RepresentativePoint;
    bool dump_layers = false;
};

struct CalibrationConfig {
    std::vector<std::string> features = {"ln_area", "center_distance", "poi_density_norm"};
    std::string distance_unit = "km";
    FitOptions fit;
    double label_overlap = 0.5;   // share of a parcel inside training polygons to label it urban
};

struct Config {
    std::string base_dir;
    nlohmann::json raw;           // echo for the manifest

    InputPaths inputs;
    Point city_center;
    std::string crs = "unspecified";
    RoadConfig roads;
    bool exclude_outside_pois = false;
    double slope_threshold_deg = 25;
    double max_constraint_overlap = kDefaultConstraintOverlap;
    CalibrationConfig calibration;
    CAParams ca;
    std::optional<double> ca_budget;
    std::optional<double> residential_budget;
    WeightMode weight_mode = WeightMode::DensityTimesArea;
    SynthesisOptions synthesis;
    bool agent_jitter = false;
    bool agents_geojson = true;
    SimilarityOptions similarity;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    std::string resolve(const std::string& path) const;
};

Config parse_config(const nlohmann::json& j, const std::string& base_dir);
Config load_config(const std::string& path);

} // namespace parcelpop
