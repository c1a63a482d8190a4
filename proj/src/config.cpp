#include "parcelpop/config.hpp"
#include "parcelpop/error.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace parcelpop {

namespace fs = std::filesystem;
using nlohmann::json;

std::string Config::resolve(const std::string& path) const {
    const fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
    return (fs::path(base_dir) / p).lexically_normal().string();
}

namespace {

// Reads members of one JSON object and rejects any key it was not asked for.
class Section {
public:
    Section(const json& j, std::string name) : name_(std::move(name)) {
        if (!j.is_object()) throw InputError("config: '" + name_ + "' must be an object");
        obj_ = &j;
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        auto it = obj_->find(key);
        if (it == obj_->end() || it->is_null()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw InputError("config: '" + path(key) + "' has the wrong type");
        }
    }

    template <typename T>
    void get(const std::string& key, std::optional<T>& out) {
        T v{};
        seen_.insert(key);
        if (!obj_->contains(key) || obj_->at(key).is_null()) return;
        seen_.erase(key);
        get(key, v);
        out = v;
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        auto it = obj_->find(key);
        return it == obj_->end() || it->is_null() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    void finish() const {
        for (auto it = obj_->begin(); it != obj_->end(); ++it)
            if (!seen_.count(it.key())) throw InputError("config: unknown key '" + path(it.key()) + "'");
    }

private:
    const json* obj_ = nullptr;
    std::string name_;
    std::set<std::string> seen_;
};

ClassWidthMap default_widths() {
    ClassWidthMap m;
    m.widths = {{"motorway", 30},   {"trunk", 25},   {"primary", 20}, {"secondary", 15},
                {"tertiary", 10},   {"residential", 5}, {"unclassified", 5}, {"service", 3},
                {"living_street", 3}, {"track", 2},  {"path", 2},      {"footway", 2},   {"cycleway", 2}};
    return m;
}

void parse_inputs(const json& j, Config& c) {
    Section s(j, "inputs");
    auto& in = c.inputs;
    s.get("roads", in.roads);
    s.get("pois", in.pois);
    s.get("admin_units", in.admin_units);
    s.get("census", in.census);
    s.get("constraints", in.constraints);
    s.get("extent", in.extent);
    s.get("model", in.model);
    s.get("training_parcels", in.training_parcels);
    s.get("reference_parcels", in.reference_parcels);
    s.get("reference_residential", in.reference_residential);
    s.get("regions", in.regions);
    s.get("buildings", in.buildings);
    s.get("reference_agents", in.reference_agents);
    s.finish();
}

void parse_roads(const json& j, Config& c) {
    Section s(j, "roads");
    auto& r = c.roads;
    if (const auto* w = s.child("widths")) {
        r.widths.widths.clear();
        Section ws(*w, "roads.widths");
        for (auto it = w->begin(); it != w->end(); ++it) {
            double v = 0;
            ws.get(it.key(), v);
            r.widths.widths[it.key()] = v;
        }
    }
    s.get("default_width", r.widths.default_width);
    s.get("snap", r.snap);
    s.get("trim_threshold", r.trim_threshold);
    s.get("extension", r.extension);
    s.get("min_parcel_area", r.min_parcel_area);
    s.get("circle_points", r.circle_points);
    std::string mode;
    s.get("admin_mode", mode);
    if (mode == "split")
        r.admin_mode = AdminAssignMode::Split;
    else if (!mode.empty() && mode != "representative_point")
        throw InputError("config: roads.admin_mode must be 'representative_point' or 'split'");
    s.get("dump_layers", r.dump_layers);
    s.finish();
    r.widths.validate();
    if (!(r.snap > 0)) throw InputError("config: roads.snap must be positive");
    if (!(r.trim_threshold >= 0)) throw InputError("config: roads.trim_threshold must be >= 0");
    if (!(r.extension >= 0)) throw InputError("config: roads.extension must be >= 0");
    if (!(r.min_parcel_area >= 0)) throw InputError("config: roads.min_parcel_area must be >= 0");
    if (r.circle_points < 8) throw InputError("config: roads.circle_points must be >= 8");
}

void parse_calibration(const json& j, Config& c) {
    Section s(j, "calibration");
    auto& k = c.calibration;
    s.get("features", k.features);
    s.get("distance_unit", k.distance_unit);
    s.get("max_iter", k.fit.max_iter);
    s.get("tol", k.fit.tol);
    s.get("max_halvings", k.fit.max_halvings);
    s.get("divergence_norm", k.fit.divergence_norm);
    s.get("label_overlap", k.label_overlap);
    s.finish();
    if (k.distance_unit != "m" && k.distance_unit != "km")
        throw InputError("config: calibration.distance_unit must be 'm' or 'km'");
    if (k.features.empty()) throw InputError("config: calibration.features is empty");
    if (!(k.label_overlap > 0 && k.label_overlap <= 1))
        throw InputError("config: calibration.label_overlap must lie in (0, 1]");
}

void parse_ca(const json& j, Config& c, bool& seed_given) {
    Section s(j, "ca");
    auto& p = c.ca;
    s.get("threshold", p.threshold);
    s.get("beta", p.beta);
    s.get("neighbor_radius", p.neighbor_radius);
    s.get("neighborhood_floor", p.neighborhood_floor);
    s.get("max_iterations", p.max_iterations);
    s.get("seed_fraction", p.seed_fraction);
    s.get("fill_fraction", p.fill_fraction);
    s.get("stop_when_stalled", p.stop_when_stalled);
    s.get("record_snapshots", p.record_snapshots);
    std::optional<std::uint64_t> seed;
    s.get("seed", seed);
    if (seed) {
        p.seed = *seed;
        seed_given = true;
    }
    s.get("area_budget", c.ca_budget);
    s.finish();
    p.validate();
    if (c.ca_budget && !(*c.ca_budget > 0)) throw InputError("config: ca.area_budget must be positive");
}

} // namespace

Config parse_config(const json& j, const std::string& base_dir) {
    Config c;
    c.base_dir = base_dir;
    c.raw = j;
    c.roads.widths = default_widths();
    Section top(j, "");
    top.get("seed", c.seed);
    top.get("threads", c.threads);
    top.get("crs", c.crs);
    if (const auto* cc = top.child("city_center")) {
        if (!cc->is_array() || cc->size() != 2 || !(*cc)[0].is_number() || !(*cc)[1].is_number())
            throw InputError("config: city_center must be [x, y]");
        c.city_center = Point((*cc)[0].get<double>(), (*cc)[1].get<double>());
    } else {
        throw InputError("config: city_center is required");
    }
    if (const auto* in = top.child("inputs")) parse_inputs(*in, c);
    if (const auto* r = top.child("roads")) parse_roads(*r, c);
    if (const auto* p = top.child("pois")) {
        Section s(*p, "pois");
        s.get("exclude_outside", c.exclude_outside_pois);
        s.finish();
    }
    if (const auto* k = top.child("constraints")) {
        Section s(*k, "constraints");
        s.get("slope_threshold_deg", c.slope_threshold_deg);
        s.get("max_overlap", c.max_constraint_overlap);
        s.finish();
        if (!(c.max_constraint_overlap >= 0 && c.max_constraint_overlap <= 1))
            throw InputError("config: constraints.max_overlap must lie in [0, 1]");
    }
    if (const auto* k = top.child("calibration")) parse_calibration(*k, c);
    bool ca_seed = false;
    if (const auto* k = top.child("ca")) parse_ca(*k, c, ca_seed);
    if (!ca_seed) c.ca.seed = c.seed;
    if (const auto* a = top.child("allocation")) {
        Section s(*a, "allocation");
        s.get("residential_budget", c.residential_budget);
        std::string mode;
        s.get("weight_mode", mode);
        if (mode == "density")
            c.weight_mode = WeightMode::Density;
        else if (!mode.empty() && mode != "density_x_area")
            throw InputError("config: allocation.weight_mode must be 'density_x_area' or 'density'");
        s.finish();
        if (c.residential_budget && !(*c.residential_budget > 0))
            throw InputError("config: allocation.residential_budget must be positive");
    }
    if (const auto* k = top.child("synthesis")) {
        Section s(*k, "synthesis");
        s.get("working_age", c.synthesis.working_age);
        s.get("paper_faithful", c.synthesis.paper_faithful);
        s.get("no_job_label", c.synthesis.no_job_label);
        s.get("jitter", c.agent_jitter);
        s.get("geojson", c.agents_geojson);
        s.finish();
    }
    if (const auto* k = top.child("similarity")) {
        Section s(*k, "similarity");
        s.get("age_tolerance", c.similarity.age_tolerance);
        s.get("income_tolerance", c.similarity.income_tolerance);
        s.get("tam_tolerance", c.similarity.tam_tolerance);
        s.finish();
    }
    top.finish();
    if (c.threads == 0) c.threads = 1;
    c.ca.threads = c.threads;
    c.synthesis.threads = c.threads;
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j, fs::absolute(fs::path(path)).parent_path().string());
}

} // namespace parcelpop
