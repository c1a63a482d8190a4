#include "parcelpop/pipeline.hpp"
#include "parcelpop/csv.hpp"
#include "parcelpop/error.hpp"
#include "parcelpop/geojson.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace parcelpop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kParcelsFile = "parcels.geojson";
const char* kRoadSpaceFile = "roadspace.geojson";
const char* kFeaturesFile = "features.csv";
const char* kModelFile = "model.json";
const char* kLabelsFile = "labels.csv";
const char* kStatusFile = "ca_status.csv";
const char* kLogFile = "ca_log.csv";
const char* kResidentialFile = "residential.csv";
const char* kAllocationFile = "allocation.csv";
const char* kPlanFile = "plan.json";
const char* kAgentsFile = "agents.csv";
const char* kAgentsGeoFile = "agents.geojson";
const char* kMetricsFile = "metrics.json";
const char* kManifestFile = "manifest.json";

std::string hex(const unsigned char* p, unsigned n) {
    std::ostringstream os;
    for (unsigned i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(p[i]);
    return os.str();
}

std::string sha256_bytes(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &n, EVP_sha256(), nullptr))
        throw std::runtime_error("SHA-256 failed");
    return hex(md, n);
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

struct StageNeeds {
    int step;   // framework step served by the stage; 0 for validation
    std::vector<std::pair<const char*, bool (*)(const InputPaths&)>> inputs;
};

const std::map<std::string, StageNeeds>& stage_needs() {
    static const std::map<std::string, StageNeeds> m = {
        {"parcelize",
         {1,
          {{"inputs.roads", [](const InputPaths& p) { return p.roads.has_value(); }},
           {"inputs.extent", [](const InputPaths& p) { return p.extent.has_value(); }},
           {"inputs.admin_units", [](const InputPaths& p) { return p.admin_units.has_value(); }}}}},
        {"features", {2, {{"inputs.pois", [](const InputPaths& p) { return p.pois.has_value(); }}}}},
        {"calibrate",
         {2,
          {{"inputs.model or inputs.training_parcels",
            [](const InputPaths& p) { return p.model.has_value() || p.training_parcels.has_value(); }}}}},
        {"ca", {2, {}}},
        {"allocate", {4, {{"inputs.admin_units", [](const InputPaths& p) { return p.admin_units.has_value(); }}}}},
        {"synthesize", {5, {{"inputs.census", [](const InputPaths& p) { return p.census.has_value(); }}}}},
        {"validate", {0, {}}},
    };
    return m;
}

// ------------------------------------------------------------ parcelize

json run_parcelize(const Config& cfg, const std::string& out, std::vector<std::string>& files) {
    const auto roads = load_roads(cfg.resolve(*cfg.inputs.roads), cfg.roads.widths);
    const auto extent = load_extent(cfg.resolve(*cfg.inputs.extent));
    const auto units = load_admin_units(cfg.resolve(*cfg.inputs.admin_units));
    CityContext{cfg.city_center, extent, cfg.crs}.validate();

    const auto merged = merge_roads(roads, cfg.roads.snap);
    std::size_t trimmed_chains = 0;
    const auto trimmed = trim_dangles(merged, cfg.roads.trim_threshold, &trimmed_chains);
    const auto extended = extend_segments(trimmed, cfg.roads.extension, cfg.roads.snap);
    const auto space = buffer_roads(extended, cfg.roads.widths, cfg.threads, cfg.roads.circle_points);
    const auto raw = polygonize_complement(extent, space, cfg.roads.min_parcel_area);
    AdminAssignReport admin;
    const auto parcels = assign_admin(raw, units.units, cfg.roads.admin_mode, &admin);

    write_parcels(join(out, kParcelsFile), parcels.parcels);
    geojson::write_file(join(out, kRoadSpaceFile),
                        geojson::collection({geojson::feature(geojson::from_multipolygon(space.geometry),
                                                              {{"layer", "road_space"}})}));
    files = {kParcelsFile, kRoadSpaceFile};
    if (cfg.roads.dump_layers) {
        write_lines(join(out, "lines_merged.geojson"), merged);
        write_lines(join(out, "lines_trimmed.geojson"), trimmed);
        write_lines(join(out, "lines_extended.geojson"), extended);
        files.insert(files.end(), {"lines_merged.geojson", "lines_trimmed.geojson", "lines_extended.geojson"});
    }
    return {{"roads_loaded", roads.report.accepted},
            {"roads_rejected", roads.report.rejected},
            {"edges_merged", merged.edges.size()},
            {"dangles_removed", trimmed_chains},
            {"edges_extended", extended.edges.size()},
            {"road_area", parcels.report.road_area},
            {"parcels", parcels.parcels.size()},
            {"parcel_area", parcels.report.parcel_area},
            {"dropped_slivers", parcels.report.dropped_count},
            {"unassigned_parcels", admin.unassigned.size()},
            {"straddling_parcels", admin.straddling}};
}

// ------------------------------------------------------------- features

json run_features(const Config& cfg, const std::string& out, std::vector<std::string>& files) {
    const auto parcels = read_parcels(join(out, kParcelsFile));
    auto pois = load_pois(cfg.resolve(*cfg.inputs.pois));
    std::size_t outside = 0;
    if (cfg.inputs.extent) outside = flag_outside(pois, load_extent(cfg.resolve(*cfg.inputs.extent)));
    std::vector<POI> used;
    for (const auto& p : pois.pois)
        if (!(cfg.exclude_outside_pois && p.outside_extent)) used.push_back(p);
    const auto table = compute_features(parcels, used, cfg.city_center, cfg.threads);
    write_features_csv(join(out, kFeaturesFile), table);
    files = {kFeaturesFile};
    return {{"parcels", table.size()},
            {"pois_loaded", pois.report.accepted},
            {"pois_rejected", pois.report.rejected},
            {"pois_outside_extent", outside},
            {"pois_used", used.size()}};
}

// ------------------------------------------------------------ calibrate

std::vector<Polygon> read_polygons(const std::string& path) {
    std::vector<Polygon> out;
    for (const auto& f : geojson::read_features(path))
        for (auto& p : geojson::to_multipolygon(f.geometry)) out.push_back(std::move(p));
    return out;
}

std::vector<int> training_labels(const std::vector<Parcel>& parcels, const MultiPolygon& urban, double min_share) {
    std::vector<int> y;
    y.reserve(parcels.size());
    for (const auto& p : parcels) y.push_back(constraint_overlap(p.geometry, urban) >= min_share ? 1 : 0);
    return y;
}

json run_calibrate(const Config& cfg, const std::string& out, std::vector<std::string>& files) {
    const auto table = read_features_csv(join(out, kFeaturesFile));
    json summary;
    LogisticModel model;
    std::optional<std::vector<int>> labels;
    if (cfg.inputs.training_parcels) {
        const auto parcels = read_parcels(join(out, kParcelsFile));
        const auto urban = union_all(read_polygons(cfg.resolve(*cfg.inputs.training_parcels)));
        labels = training_labels(parcels, urban, cfg.calibration.label_overlap);
        std::ofstream lf(join(out, kLabelsFile));
        csv::write_row(lf, {"parcel_id", "urban"});
        for (std::size_t i = 0; i < parcels.size(); ++i)
            csv::write_row(lf, {std::to_string(parcels[i].id), std::to_string((*labels)[i])});
        files.push_back(kLabelsFile);
    }
    if (cfg.inputs.model) {
        model = read_model(cfg.resolve(*cfg.inputs.model));
        summary["source"] = "file";
    } else {
        const auto X = design_matrix(table, cfg.calibration.features, cfg.calibration.distance_unit);
        Eigen::VectorXd y(static_cast<Eigen::Index>(labels->size()));
        for (std::size_t i = 0; i < labels->size(); ++i) y(static_cast<Eigen::Index>(i)) = (*labels)[i];
        model = fit_logistic(X, y, cfg.calibration.features, cfg.calibration.fit);
        model.distance_unit = cfg.calibration.distance_unit;
        summary["source"] = "fit";
        summary["iterations"] = model.iterations;
        summary["log_likelihood"] = model.log_likelihood;
    }
    if (labels) {
        const auto X = design_matrix(table, model.features, model.distance_unit);
        Eigen::VectorXd y(static_cast<Eigen::Index>(labels->size()));
        for (std::size_t i = 0; i < labels->size(); ++i) y(static_cast<Eigen::Index>(i)) = (*labels)[i];
        summary["training_accuracy"] = classification_accuracy(model, X, y, 0.5);
        summary["urban_labels"] = std::count(labels->begin(), labels->end(), 1);
    }
    write_model(join(out, kModelFile), model);
    files.insert(files.begin(), kModelFile);
    summary["intercept"] = model.intercept;
    summary["coefficients"] = model.coefficients;
    summary["features"] = model.features;
    return summary;
}

// ------------------------------------------------------------------- ca

struct CaStatusRow {
    std::int64_t parcel_id = 0;
    LandStatus status = LandStatus::NonUrban;
    double local_potential = 0;
    int suitability = 1;
    std::int64_t converted_at = -1;   // 0 for seeds
};

const csv::Row kStatusHeader = {"parcel_id", "status", "local_potential", "suitability", "converted_at"};

std::vector<CaStatusRow> read_status(const std::string& path) {
    const auto t = csv::read_file(path);
    std::vector<std::size_t> col;
    for (const auto& n : kStatusHeader) col.push_back(t.require_column(n, path));
    std::vector<CaStatusRow> out;
    for (const auto& r : t.rows) {
        if (r.size() < kStatusHeader.size()) throw InputError(path + ": short row");
        CaStatusRow s;
        s.parcel_id = csv::parse_int(r[col[0]], path);
        s.status = r[col[1]] == "urban" ? LandStatus::Urban : LandStatus::NonUrban;
        s.local_potential = csv::parse_double(r[col[2]], path);
        s.suitability = static_cast<int>(csv::parse_int(r[col[3]], path));
        s.converted_at = csv::parse_int(r[col[4]], path);
        out.push_back(s);
    }
    return out;
}

json run_ca(const Config& cfg, const std::string& out, std::vector<std::string>& files) {
    if (!cfg.ca_budget) throw InputError("ca.area_budget is required");
    const auto parcels = read_parcels(join(out, kParcelsFile));
    const auto table = read_features_csv(join(out, kFeaturesFile));
    const auto model = read_model(join(out, kModelFile));
    if (table.size() != parcels.size()) throw InputError("features.csv does not match parcels.geojson");

    std::vector<ConstraintLayer> layers;
    for (const auto& path : cfg.inputs.constraints)
        for (auto& l : load_constraints(cfg.resolve(path), cfg.slope_threshold_deg)) layers.push_back(std::move(l));
    const auto cu = constraint_union(layers);

    CAInputs in;
    in.parcels = &parcels;
    for (std::size_t i = 0; i < parcels.size(); ++i) {
        if (table[i].parcel_id != parcels[i].id) throw InputError("features.csv is not in parcel order");
        in.local_potential.push_back(local_potential(model, table[i]));
        in.suitability.push_back(constraint_mask(parcels[i].geometry, cu, cfg.max_constraint_overlap));
    }
    const auto graph = build_neighbor_graph(parcels, cfg.ca.neighbor_radius, cfg.threads);
    in.graph = &graph;
    CAParams params = cfg.ca;
    params.record_snapshots = true;
    const auto init = initial_state(in, params, *cfg.ca_budget);
    const auto res = run(init, in, params, *cfg.ca_budget);

    std::vector<std::int64_t> converted_at(parcels.size(), -1);
    for (std::size_t t = 0; t < res.snapshots.size(); ++t)
        for (std::size_t i = 0; i < parcels.size(); ++i)
            if (converted_at[i] < 0 && res.snapshots[t][i] == LandStatus::Urban)
                converted_at[i] = static_cast<std::int64_t>(t);

    {
        std::ofstream s(join(out, kStatusFile));
        csv::write_row(s, kStatusHeader);
        for (std::size_t i = 0; i < parcels.size(); ++i)
            csv::write_row(s, {std::to_string(parcels[i].id),
                               res.final_state.status[i] == LandStatus::Urban ? "urban" : "non_urban",
                               csv::format_double(in.local_potential[i]), std::to_string(in.suitability[i]),
                               std::to_string(converted_at[i])});
        std::ofstream l(join(out, kLogFile));
        csv::write_row(l, {"iteration", "candidates", "converted", "deferred", "urban_area"});
        csv::write_row(l, {"0", "0", std::to_string(std::count(init.status.begin(), init.status.end(), LandStatus::Urban)),
                           "0", csv::format_double(init.urban_area)});
        for (const auto& e : res.log)
            csv::write_row(l, {std::to_string(e.iteration), std::to_string(e.candidates), std::to_string(e.converted),
                               std::to_string(e.deferred), csv::format_double(e.urban_area)});
    }
    files = {kStatusFile, kLogFile};
    const auto urban = std::count(res.final_state.status.begin(), res.final_state.status.end(), LandStatus::Urban);
    return {{"iterations", res.log.size()},
            {"stop_reason", res.stop_reason},
            {"seed_parcels", std::count(init.status.begin(), init.status.end(), LandStatus::Urban)},
            {"urban_parcels", urban},
            {"urban_area", res.final_state.urban_area},
            {"area_budget", *cfg.ca_budget},
            {"constrained_parcels", std::count(in.suitability.begin(), in.suitability.end(), 0)}};
}

// ------------------------------------------------------------- allocate

json run_allocate(const Config& cfg, const std::string& out, std::vector<std::string>& files) {
    const auto parcels = read_parcels(join(out, kParcelsFile));
    const auto table = read_features_csv(join(out, kFeaturesFile));
    const auto status = read_status(join(out, kStatusFile));
    const auto units = load_admin_units(cfg.resolve(*cfg.inputs.admin_units));
    if (status.size() != parcels.size() || table.size() != parcels.size())
        throw InputError("stage outputs disagree on the parcel count");

    std::map<AdminId, std::vector<DensityRecord>> urban_by_unit;
    std::vector<DensityRecord> urban_all;
    for (std::size_t i = 0; i < parcels.size(); ++i) {
        if (status[i].status != LandStatus::Urban || !parcels[i].admin_id) continue;
        DensityRecord r{parcels[i].id, parcels[i].admin_id, parcels[i].area, table[i].residential_density_std};
        urban_by_unit[*parcels[i].admin_id].push_back(r);
        urban_all.push_back(r);
    }

    json warnings = json::array();
    std::vector<DensityRecord> selected;
    std::set<std::int64_t> chosen;
    auto take = [&](const std::vector<DensityRecord>& pool, double budget) {
        auto sel = select_residential(pool, budget);
        for (auto& w : sel.warnings) warnings.push_back(w);
        chosen.insert(sel.selected.begin(), sel.selected.end());
    };
    const bool per_unit = std::any_of(units.units.begin(), units.units.end(),
                                      [](const AdminUnit& u) { return u.residential_area_budget.has_value(); });
    if (per_unit) {
        for (const auto& u : units.units) {
            auto it = urban_by_unit.find(u.id);
            if (it == urban_by_unit.end()) continue;
            take(it->second, u.residential_area_budget.value_or(std::numeric_limits<double>::infinity()));
        }
    } else if (!urban_all.empty()) {
        take(urban_all, cfg.residential_budget.value_or(std::numeric_limits<double>::infinity()));
    }
    for (const auto& r : urban_all)
        if (chosen.count(r.parcel_id)) selected.push_back(r);

    const auto alloc = allocate_population(units.units, selected, cfg.weight_mode);
    write_allocation_csv(join(out, kAllocationFile), alloc);
    {
        std::ofstream f(join(out, kResidentialFile));
        csv::write_row(f, {"parcel_id", "admin_id", "area", "density"});
        for (const auto& r : selected)
            csv::write_row(f, {std::to_string(r.parcel_id), std::to_string(*r.admin_id), csv::format_double(r.area),
                               csv::format_double(r.density)});
    }
    files = {kResidentialFile, kAllocationFile};
    double area = 0;
    for (const auto& r : selected) area += r.area;
    return {{"urban_parcels", urban_all.size()},
            {"residential_parcels", selected.size()},
            {"residential_area", area},
            {"population", alloc.total()},
            {"warnings", warnings}};
}

// ----------------------------------------------------------- synthesize

std::map<std::int64_t, double> tam_table(const std::vector<ParcelFeatures>& table) {
    std::map<std::int64_t, double> m;
    for (const auto& f : table) m[f.parcel_id] = f.center_distance;
    return m;
}

json run_synthesize(const Config& cfg, const std::string& out, std::vector<std::string>& files) {
    const auto census = load_census(cfg.resolve(*cfg.inputs.census));
    const auto plan = build_conditionals(census);
    const auto alloc = read_allocation_csv(join(out, kAllocationFile));
    const auto table = read_features_csv(join(out, kFeaturesFile));
    const auto agents = synthesize(alloc, plan, tam_table(table), cfg.seed, cfg.synthesis);

    {
        std::ofstream p(join(out, kPlanFile));
        p << to_json(plan).dump(1) << '\n';
    }
    write_agents_csv(join(out, kAgentsFile), agents);
    files = {kPlanFile, kAgentsFile};
    if (cfg.agents_geojson) {
        write_agents_geojson(join(out, kAgentsGeoFile), agents, read_parcels(join(out, kParcelsFile)),
                             cfg.agent_jitter, cfg.seed);
        files.push_back(kAgentsGeoFile);
    }
    return {{"agents", agents.size()}, {"plan_units", plan.units.size()}};
}

// ------------------------------------------------------------- validate

json similarity_json(const SimilarityResult& r) {
    json per = json::object();
    for (std::size_t k = 0; k < kAttributeCount; ++k)
        per[std::string(to_string(static_cast<Attribute>(k + 1)))] = r.per_attribute[k];
    return {{"index", r.index}, {"per_attribute", per}};
}

json run_validate(const Config& cfg, const std::string& out, std::vector<std::string>& files) {
    json m = json::object();
    const auto parcels = read_parcels(join(out, kParcelsFile));
    std::vector<Polygon> urban;
    std::map<std::int64_t, const Parcel*> by_id;
    for (const auto& p : parcels) by_id[p.id] = &p;

    if (fs::exists(join(out, kStatusFile))) {
        const auto status = read_status(join(out, kStatusFile));
        for (std::size_t i = 0; i < status.size() && i < parcels.size(); ++i)
            if (status[i].status == LandStatus::Urban) urban.push_back(parcels[i].geometry);
    }
    if (fs::exists(join(out, kLabelsFile))) {
        const auto t = csv::read_file(join(out, kLabelsFile));
        const auto model = read_model(join(out, kModelFile));
        const auto table = read_features_csv(join(out, kFeaturesFile));
        Eigen::VectorXd y(static_cast<Eigen::Index>(t.rows.size()));
        for (std::size_t i = 0; i < t.rows.size(); ++i)
            y(static_cast<Eigen::Index>(i)) = static_cast<double>(csv::parse_int(t.rows[i].at(1), kLabelsFile));
        if (static_cast<std::size_t>(y.size()) == table.size())
            m["classification_accuracy"] =
                classification_accuracy(model, design_matrix(table, model.features, model.distance_unit), y, 0.5);
    }
    if (cfg.inputs.reference_parcels && !urban.empty())
        m["urban_overlap_ratio"] = area_overlap_ratio(urban, read_polygons(cfg.resolve(*cfg.inputs.reference_parcels)));

    std::vector<Polygon> residential;
    std::optional<ResidentialAllocation> alloc;
    if (fs::exists(join(out, kAllocationFile))) {
        alloc = read_allocation_csv(join(out, kAllocationFile));
        for (const auto& r : alloc->rows) residential.push_back(by_id.at(r.parcel_id)->geometry);
    }
    if (cfg.inputs.reference_residential && !residential.empty())
        m["residential_overlap_ratio"] =
            area_overlap_ratio(residential, read_polygons(cfg.resolve(*cfg.inputs.reference_residential)));

    if (cfg.inputs.regions) {
        const auto regions = read_polygons(cfg.resolve(*cfg.inputs.regions));
        m["urban_area_by_region"] = subregion_distribution(urban, regions);
        if (cfg.inputs.reference_parcels)
            m["reference_area_by_region"] =
                subregion_distribution(read_polygons(cfg.resolve(*cfg.inputs.reference_parcels)), regions);
    }

    if (cfg.inputs.buildings && alloc && alloc->rows.size() >= 2) {
        std::map<std::int64_t, double> floor;
        for (const auto& r : alloc->rows) floor[r.parcel_id] = 0;
        for (const auto& f : geojson::read_features(cfg.resolve(*cfg.inputs.buildings))) {
            const auto pt = geojson::to_point(f.geometry);
            const double fs_value = f.properties.value("floor_space", 0.0);
            for (auto& [id, total] : floor)
                if (bg::covered_by(pt, by_id.at(id)->geometry)) {
                    total += fs_value;
                    break;
                }
        }
        std::vector<double> x, y;
        for (const auto& r : alloc->rows) {
            x.push_back(floor[r.parcel_id]);
            y.push_back(static_cast<double>(r.population));
        }
        try {
            m["floor_space_pearson"] = pearson(x, y);
        } catch (const InputError& e) {
            m["floor_space_pearson"] = nullptr;
            m["floor_space_pearson_note"] = e.what();
        }
    }

    if (fs::exists(join(out, kAgentsFile)) && alloc && cfg.inputs.census) {
        const auto agents = read_agents_csv(join(out, kAgentsFile));
        const auto plan = build_conditionals(load_census(cfg.resolve(*cfg.inputs.census)));
        const auto tam = tam_table(read_features_csv(join(out, kFeaturesFile)));
        std::vector<Agent> reference;
        std::string ref_name;
        if (cfg.inputs.reference_agents) {
            reference = read_agents_csv(cfg.resolve(*cfg.inputs.reference_agents));
            ref_name = "reference_agents";
        } else {
            reference = synthesize(*alloc, plan, tam, cfg.seed + 1, cfg.synthesis);
            ref_name = "resynthesis";
        }
        json si;
        si["reference"] = ref_name;
        if (reference.size() == agents.size()) {
            si["model"] = similarity_json(similarity_index(agents, reference, cfg.similarity));
            si["null_model"] =
                similarity_json(similarity_index(synthesize_null(*alloc, plan, tam, cfg.seed), reference, cfg.similarity));
        } else {
            si["note"] = "agent counts differ (" + std::to_string(agents.size()) + " vs " +
                         std::to_string(reference.size()) + ")";
        }
        m["similarity"] = si;
    }

    std::ofstream f(join(out, kMetricsFile));
    f << m.dump(1) << '\n';
    files = {kMetricsFile};
    return m;
}

std::vector<std::string> config_input_paths(const Config& cfg, std::vector<std::string>& names) {
    std::vector<std::string> paths;
    auto add = [&](const char* name, const std::optional<std::string>& p) {
        if (p) {
            names.push_back(name);
            paths.push_back(cfg.resolve(*p));
        }
    };
    const auto& in = cfg.inputs;
    add("roads", in.roads);
    add("pois", in.pois);
    add("admin_units", in.admin_units);
    add("census", in.census);
    for (std::size_t i = 0; i < in.constraints.size(); ++i) {
        names.push_back("constraints[" + std::to_string(i) + "]");
        paths.push_back(cfg.resolve(in.constraints[i]));
    }
    add("extent", in.extent);
    add("model", in.model);
    add("training_parcels", in.training_parcels);
    add("reference_parcels", in.reference_parcels);
    add("reference_residential", in.reference_residential);
    add("regions", in.regions);
    add("buildings", in.buildings);
    add("reference_agents", in.reference_agents);
    return paths;
}

} // namespace

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_bytes(ss.str());
}

void check_stage_inputs(const Config& cfg, const std::string& stage) {
    const auto& m = stage_needs();
    auto it = m.find(stage);
    if (it == m.end()) throw InputError("unknown stage '" + stage + "'");
    for (const auto& [name, present] : it->second.inputs)
        if (!present(cfg.inputs)) {
            std::string msg = "stage '" + stage + "'";
            if (it->second.step > 0) msg += " (framework step " + std::to_string(it->second.step) + ")";
            throw InputError(msg + " requires " + name + " in the config");
        }
}

StageResult run_stage(const Config& cfg, const std::string& stage, const std::string& out_dir) {
    StageResult r;
    r.name = stage;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        check_stage_inputs(cfg, stage);
        fs::create_directories(out_dir);
        if (stage == "parcelize")
            r.summary = run_parcelize(cfg, out_dir, r.outputs);
        else if (stage == "features")
            r.summary = run_features(cfg, out_dir, r.outputs);
        else if (stage == "calibrate")
            r.summary = run_calibrate(cfg, out_dir, r.outputs);
        else if (stage == "ca")
            r.summary = run_ca(cfg, out_dir, r.outputs);
        else if (stage == "allocate")
            r.summary = run_allocate(cfg, out_dir, r.outputs);
        else if (stage == "synthesize")
            r.summary = run_synthesize(cfg, out_dir, r.outputs);
        else
            r.summary = run_validate(cfg, out_dir, r.outputs);
    } catch (const InputError& e) {
        throw StageError(stage, e.what(), true);
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what(), false);
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::string manifest_digest(const json& manifest) {
    json m = manifest;
    m.erase("digest");
    m.erase("total_seconds");
    // Thread count never changes results.
    m.erase("threads");
    if (m.contains("config") && m["config"].is_object()) m["config"].erase("threads");
    if (m.contains("stages"))
        for (auto& s : m["stages"]) s.erase("seconds");
    return sha256_bytes(m.dump());
}

PipelineResult run_pipeline(const Config& cfg, const std::string& out_dir) {
    PipelineResult res;
    json manifest;
    manifest["seed"] = cfg.seed;
    manifest["threads"] = cfg.threads;
    manifest["config"] = cfg.raw;
    std::vector<std::string> names;
    const auto paths = config_input_paths(cfg, names);
    json inputs = json::object();
    for (std::size_t i = 0; i < paths.size(); ++i)
        if (fs::exists(paths[i])) inputs[names[i]] = {{"path", paths[i]}, {"sha256", sha256_file(paths[i])}};
    manifest["inputs"] = inputs;

    const auto t0 = std::chrono::steady_clock::now();
    json stages = json::array();
    for (const auto& name : kStages) {
        auto r = run_stage(cfg, name, out_dir);
        json outs = json::array();
        for (const auto& f : r.outputs) outs.push_back({{"file", f}, {"sha256", sha256_file(join(out_dir, f))}});
        stages.push_back({{"name", r.name}, {"outputs", outs}, {"seconds", r.seconds}, {"summary", r.summary}});
        res.stages.push_back(std::move(r));
    }
    manifest["stages"] = stages;
    manifest["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest["digest"] = manifest_digest(manifest);
    std::ofstream f(join(out_dir, kManifestFile));
    f << manifest.dump(1) << '\n';
    res.manifest = std::move(manifest);
    return res;
}

// ------------------------------------------------------------- emit_map

std::vector<std::string> emit_map(const std::string& stage, const std::string& out_dir, const std::string& path) {
    static const std::set<std::string> known = {"parcels", "features", "ca", "allocation", "agents"};
    if (!known.count(stage))
        throw InputError("unknown map stage '" + stage + "' (expected parcels, features, ca, allocation or agents)");
    std::vector<std::string> written;
    if (stage == "agents") {
        const auto agents = read_agents_csv(join(out_dir, kAgentsFile));
        write_agents_geojson(path, agents, read_parcels(join(out_dir, kParcelsFile)), false, 0);
        return {path};
    }
    const auto parcels = read_parcels(join(out_dir, kParcelsFile));
    auto base_props = [](const Parcel& p) {
        json j = {{"id", p.id}, {"area", p.area}};
        j["admin_id"] = p.admin_id ? json(*p.admin_id) : json(nullptr);
        return j;
    };
    std::vector<json> feats;
    if (stage == "parcels") {
        for (const auto& p : parcels) feats.push_back(geojson::feature(geojson::from_polygon(p.geometry), base_props(p)));
    } else if (stage == "features") {
        const auto table = read_features_csv(join(out_dir, kFeaturesFile));
        std::map<std::int64_t, const ParcelFeatures*> f;
        for (const auto& t : table) f[t.parcel_id] = &t;
        for (const auto& p : parcels) {
            auto props = base_props(p);
            if (auto it = f.find(p.id); it != f.end()) {
                props["density"] = it->second->poi_density_norm;
                props["residential_density"] = it->second->residential_density_std;
                props["center_distance"] = it->second->center_distance;
                props["poi_count"] = it->second->poi_count;
            }
            feats.push_back(geojson::feature(geojson::from_polygon(p.geometry), props));
        }
    } else if (stage == "ca") {
        const auto status = read_status(join(out_dir, kStatusFile));
        if (status.size() != parcels.size()) throw InputError("ca_status.csv does not match parcels.geojson");
        std::int64_t last = 0;
        if (fs::exists(join(out_dir, kLogFile))) {
            const auto log = csv::read_file(join(out_dir, kLogFile));
            for (const auto& r : log.rows) last = std::max<std::int64_t>(last, csv::parse_int(r.at(0), kLogFile));
        }
        auto at = [&](std::int64_t t) {
            std::vector<json> fs_;
            for (std::size_t i = 0; i < parcels.size(); ++i) {
                auto props = base_props(parcels[i]);
                const bool u = status[i].converted_at >= 0 && status[i].converted_at <= t;
                props["status"] = u ? "urban" : "non_urban";
                props["local_potential"] = status[i].local_potential;
                props["suitability"] = status[i].suitability;
                fs_.push_back(geojson::feature(geojson::from_polygon(parcels[i].geometry), props));
            }
            return geojson::collection(std::move(fs_));
        };
        geojson::write_file(path, at(last));
        written.push_back(path);
        const fs::path p(path);
        for (std::int64_t t = 0; t <= last; ++t) {
            const auto name = (p.parent_path() / (p.stem().string() + "_iter" + std::to_string(t) + p.extension().string()))
                                  .string();
            geojson::write_file(name, at(t));
            written.push_back(name);
        }
        return written;
    } else {
        const auto alloc = read_allocation_csv(join(out_dir, kAllocationFile));
        std::map<std::int64_t, const Parcel*> by_id;
        for (const auto& p : parcels) by_id[p.id] = &p;
        for (const auto& r : alloc.rows) {
            auto it = by_id.find(r.parcel_id);
            if (it == by_id.end()) throw InputError("allocation refers to unknown parcel " + std::to_string(r.parcel_id));
            auto props = base_props(*it->second);
            props["status"] = "residential";
            props["density"] = r.density;
            props["population"] = r.population;
            feats.push_back(geojson::feature(geojson::from_polygon(it->second->geometry), props));
        }
    }
    geojson::write_file(path, geojson::collection(std::move(feats)));
    return {path};
}

} // namespace parcelpop
