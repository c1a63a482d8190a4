// Writes the bundled toy-city inputs: a 5 km square city with an irregular
// arterial grid, local streets, spurs, a gapped street, clustered POIs, four
// quadrant admin units, constraints, census tables and validation layers.
//
//   make_toy_city <out_dir>

#include "parcelpop/csv.hpp"
#include "parcelpop/geojson.hpp"
#include "parcelpop/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

using namespace parcelpop;
using nlohmann::json;

namespace {

constexpr double kSize = 5000;
const std::vector<double> kArterials = {0, 480, 1010, 1490, 2000, 2500, 3020, 3500, 3980, 4510, 5000};

Polyline line(std::initializer_list<std::pair<double, double>> pts) {
    Polyline l;
    for (auto [x, y] : pts) l.push_back(Point(x, y));
    return l;
}

Polygon circle(double cx, double cy, double r, int n = 64) {
    Polygon p;
    for (int i = 0; i <= n; ++i) {
        const double a = -2 * std::numbers::pi * (i % n) / n;
        p.outer().push_back(Point(cx + r * std::cos(a), cy + r * std::sin(a)));
    }
    bg::correct(p);
    return p;
}

Polygon square_with_hole(double lo, double hi, double hole_lo, double hole_hi) {
    Polygon p = make_rect(lo, lo, hi, hi);
    if (hole_hi > hole_lo) {
        Polygon h = make_rect(hole_lo, hole_lo, hole_hi, hole_hi);
        p.inners().push_back(Polygon::ring_type(h.outer().rbegin(), h.outer().rend()));
        bg::correct(p);
    }
    return p;
}

void write(const std::string& path, std::vector<json> features) {
    geojson::write_file(path, geojson::collection(std::move(features)));
}

void roads(const std::string& dir) {
    std::vector<std::pair<Polyline, std::string>> r;
    for (double x : kArterials) r.push_back({line({{x, 0}, {x, kSize}}), "primary"});
    for (double y : kArterials) r.push_back({line({{0, y}, {kSize, y}}), "primary"});
    // Local streets: inner blocks are quartered, outer blocks halved.
    for (std::size_t i = 0; i + 1 < kArterials.size(); ++i)
        for (std::size_t j = 0; j + 1 < kArterials.size(); ++j) {
            const double x0 = kArterials[i], x1 = kArterials[i + 1];
            const double y0 = kArterials[j], y1 = kArterials[j + 1];
            const double mx = (x0 + x1) / 2, my = (y0 + y1) / 2;
            const bool inner = i >= 2 && i <= 7 && j >= 2 && j <= 7;
            if (i == 8 && j == 1) {
                // Street broken by a 30 m gap that extension closes.
                r.push_back({line({{mx, y0}, {mx, my - 15}}), "residential"});
                r.push_back({line({{mx, my + 15}, {mx, y1}}), "residential"});
                continue;
            }
            if (inner || (i + j) % 2 == 0) r.push_back({line({{mx, y0}, {mx, y1}}), "residential"});
            if (inner || (i + j) % 2 == 1) r.push_back({line({{x0, my}, {x1, my}}), "residential"});
        }
    // Diagonal avenue across the north-west corner.
    r.push_back({line({{0, 3980}, {510, 4490}, {1010, 5000}}), "secondary"});
    // A 150 m spur (trimmed) and a 250 m spur (kept) into halved blocks.
    r.push_back({line({{4510 + 120, 0}, {4510 + 120, 150}}), "service"});
    r.push_back({line({{120, 3020}, {120, 3270}}), "service"});
    // Isolated fragment with no connection.
    r.push_back({line({{3600, 4100}, {3680, 4160}}), "service"});

    std::vector<json> feats;
    for (std::size_t k = 0; k < r.size(); ++k)
        feats.push_back(geojson::feature(geojson::from_polyline(r[k].first),
                                         {{"id", k + 1}, {"road_class", r[k].second}}));
    write(dir + "/roads.geojson", std::move(feats));
}

void pois(const std::string& dir) {
    static const char* cats[] = {"RES", "COM", "FIR", "TRA", "GOV", "EDU", "GRE", "OTH"};
    static const double cat_p[] = {0.42, 0.25, 0.08, 0.06, 0.04, 0.06, 0.04, 0.05};
    struct Cluster {
        double x, y, sigma;
        int n;
    };
    const std::vector<Cluster> clusters = {
        {2450, 2550, 900, 2600}, {3900, 4000, 350, 350}, {900, 1200, 300, 250}, {2500, 2500, 2600, 500}};
    std::ofstream out(dir + "/pois.csv");
    csv::write_row(out, {"id", "x", "y", "category"});
    std::int64_t id = 1;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        CounterRng rng(stream_key({2024, c}));
        for (int k = 0; k < clusters[c].n; ++k) {
            const double r = clusters[c].sigma * std::sqrt(-2 * std::log(rng.uniform()));
            const double a = 2 * std::numbers::pi * rng.uniform();
            const double x = std::round(clusters[c].x + r * std::cos(a));
            const double y = std::round(clusters[c].y + r * std::sin(a));
            double u = rng.uniform(), acc = 0;
            std::size_t cat = 7;
            for (std::size_t i = 0; i < 8; ++i) {
                acc += cat_p[i];
                if (u < acc) {
                    cat = i;
                    break;
                }
            }
            if (x < -200 || y < -200 || x > kSize + 200 || y > kSize + 200) continue;
            csv::write_row(out, {std::to_string(id++), csv::format_double(x), csv::format_double(y), cats[cat]});
        }
    }
}

void admin(const std::string& dir) {
    const double h = kSize / 2;
    struct U {
        int id;
        const char* name;
        double x0, y0;
        int pop;
        double budget;
    };
    const std::vector<U> units = {{1, "Southwest", 0, 0, 9000, 1.2e6},
                                  {2, "Southeast", h, 0, 7500, 1.0e6},
                                  {3, "Northwest", 0, h, 8000, 1.1e6},
                                  {4, "Northeast", h, h, 10500, 1.4e6}};
    std::vector<json> feats;
    for (const auto& u : units)
        feats.push_back(geojson::feature(geojson::from_polygon(make_rect(u.x0, u.y0, u.x0 + h, u.y0 + h)),
                                         {{"id", u.id},
                                          {"name", u.name},
                                          {"total_population", u.pop},
                                          {"residential_area_budget", u.budget}}));
    write(dir + "/admin_units.geojson", std::move(feats));
    write(dir + "/extent.geojson", {geojson::feature(geojson::from_polygon(make_rect(0, 0, kSize, kSize)), json::object())});
}

void constraints(const std::string& dir) {
    std::vector<json> feats;
    feats.push_back(geojson::feature(geojson::from_polygon(make_rect(3550, 560, 4420, 1240)), {{"kind", "water"}}));
    feats.push_back(geojson::feature(geojson::from_polygon(make_rect(520, 4050, 1470, 4950)),
                                     {{"kind", "steep_slope"}, {"slope_deg", 32}}));
    feats.push_back(geojson::feature(geojson::from_polygon(make_rect(4000, 2000, 4500, 2500)),
                                     {{"kind", "steep_slope"}, {"slope_deg", 12}}));
    write(dir + "/constraints.geojson", std::move(feats));
}

void census(const std::string& dir) {
    std::ofstream out(dir + "/census.csv");
    csv::write_row(out, {"admin_id", "table", "category", "subcategory", "value"});
    auto row = [&](const std::string& unit, const std::string& table, const std::string& cat, const std::string& sub,
                   double v) { csv::write_row(out, {unit, table, cat, sub, csv::format_double(v)}); };

    const std::vector<std::pair<std::string, double>> age = {{"0-15", 1400}, {"16-24", 1500}, {"25-34", 2200},
                                                             {"35-44", 1800}, {"45-54", 1500}, {"55-64", 1000},
                                                             {"65-90", 600}};
    for (auto& [c, v] : age) row("*", "AGE", c, "", v);
    row("*", "SEX", "Male", "", 5150);
    row("*", "SEX", "Female", "", 4850);
    const std::vector<std::string> mar = {"Single", "Married", "Divorced", "Widowed"};
    const std::vector<std::vector<double>> age_mar = {{100, 0, 0, 0},   {92, 8, 0, 0},    {40, 56, 4, 0},
                                                      {10, 82, 7, 1},   {5, 84, 8, 3},    {3, 82, 7, 8},
                                                      {2, 70, 4, 24}};
    const std::vector<std::string> edu = {"Primary", "Junior", "Senior", "College", "Graduate"};
    const std::vector<std::vector<double>> age_edu = {{70, 30, 0, 0, 0},   {2, 20, 38, 36, 4}, {3, 22, 25, 38, 12},
                                                      {6, 30, 28, 28, 8},  {12, 38, 28, 18, 4}, {22, 40, 24, 12, 2},
                                                      {45, 32, 15, 7, 1}};
    const std::vector<std::string> job = {"None", "Worker", "Clerk", "Professional", "Manager", "Service"};
    const std::vector<std::vector<double>> edu_job = {{50, 25, 2, 1, 1, 21}, {30, 35, 8, 3, 2, 22},
                                                      {22, 25, 20, 10, 5, 18}, {15, 8, 25, 32, 12, 8},
                                                      {10, 3, 12, 50, 20, 5}};
    std::vector<double> mar_m(mar.size(), 0), edu_m(edu.size(), 0), job_m(job.size(), 0);
    for (std::size_t a = 0; a < age.size(); ++a) {
        for (std::size_t k = 0; k < mar.size(); ++k) {
            row("*", "AGE:MARRIAGE", age[a].first, mar[k], age_mar[a][k]);
            mar_m[k] += age[a].second * age_mar[a][k] / 100;
        }
        for (std::size_t k = 0; k < edu.size(); ++k) {
            row("*", "AGE:EDUCATION", age[a].first, edu[k], age_edu[a][k]);
            edu_m[k] += age[a].second * age_edu[a][k] / 100;
        }
    }
    for (std::size_t e = 0; e < edu.size(); ++e)
        for (std::size_t k = 0; k < job.size(); ++k) {
            row("*", "EDUCATION:JOB", edu[e], job[k], edu_job[e][k]);
            job_m[k] += edu_m[e] * edu_job[e][k] / 100;
        }
    for (std::size_t k = 0; k < mar.size(); ++k) row("*", "MARRIAGE", mar[k], "", std::round(mar_m[k]));
    for (std::size_t k = 0; k < edu.size(); ++k) row("*", "EDUCATION", edu[k], "", std::round(edu_m[k]));
    for (std::size_t k = 0; k < job.size(); ++k) row("*", "JOB", job[k], "", std::round(job_m[k]));
    const std::vector<std::pair<std::string, double>> income = {
        {"0-999", 2100}, {"1000-2999", 2600}, {"3000-4999", 2700}, {"5000-9999", 1900}, {"10000-30000", 700}};
    for (auto& [c, v] : income) row("*", "INCOME", c, "", v);
    const std::vector<std::pair<std::string, double>> fam = {{"1", 1200}, {"2", 2700}, {"3", 3600}, {"4", 1500}, {"5", 1000}};
    for (auto& [c, v] : fam) row("*", "FAMILYN", c, "", v);
    // Unit 4 is younger than the city as a whole.
    const std::vector<double> age4 = {1500, 2000, 2900, 1900, 1100, 650, 350};
    for (std::size_t a = 0; a < age.size(); ++a) row("4", "AGE", age[a].first, "", age4[a]);
}

void validation_layers(const std::string& dir) {
    // Known urban land for calibration: an off-center core, two satellite
    // towns and a park hole in the core.
    MultiPolygon core;
    bg::difference(circle(2300, 2600, 1700), circle(2750, 2250, 320), core);
    std::vector<json> train;
    for (const auto& p : core) train.push_back(geojson::feature(geojson::from_polygon(p), {{"kind", "core"}}));
    train.push_back(geojson::feature(geojson::from_polygon(circle(3950, 4000, 420)), {{"kind", "satellite"}}));
    train.push_back(geojson::feature(geojson::from_polygon(circle(900, 1200, 380)), {{"kind", "satellite"}}));
    write(dir + "/training_urban.geojson", std::move(train));

    write(dir + "/reference_urban.geojson",
          {geojson::feature(geojson::from_polygon(circle(2450, 2550, 1900)), json::object())});
    write(dir + "/reference_residential.geojson",
          {geojson::feature(geojson::from_polygon(circle(2450, 2550, 1300)), json::object())});
    write(dir + "/regions.geojson",
          {geojson::feature(geojson::from_polygon(square_with_hole(1500, 3500, 0, 0)), {{"name", "inner"}}),
           geojson::feature(geojson::from_polygon(square_with_hole(500, 4500, 1500, 3500)), {{"name", "middle"}}),
           geojson::feature(geojson::from_polygon(square_with_hole(0, kSize, 500, 4500)), {{"name", "outer"}})});

    // One building per residential POI; floor space grows toward the center.
    std::vector<json> b;
    const auto table = csv::read_file(dir + "/pois.csv");
    CounterRng rng(stream_key({77}));
    for (const auto& r : table.rows) {
        if (r[3] != "RES") continue;
        const double x = csv::parse_double(r[1], "x"), y = csv::parse_double(r[2], "y");
        if (x <= 0 || y <= 0 || x >= kSize || y >= kSize) continue;
        const double d = std::hypot(x - 2500, y - 2500);
        const double fs = std::round((1500 + 3000 * rng.uniform()) * (1 + 2 * std::exp(-d / 1500)));
        b.push_back(geojson::feature(geojson::from_point(Point(x, y)), {{"floor_space", fs}}));
    }
    write(dir + "/buildings.geojson", std::move(b));
}

void config(const std::string& dir) {
    const json c = {
        {"seed", 20140101},
        {"threads", 1},
        {"crs", "local metric grid"},
        {"city_center", {2500, 2500}},
        {"inputs",
         {{"roads", "roads.geojson"},
          {"pois", "pois.csv"},
          {"admin_units", "admin_units.geojson"},
          {"census", "census.csv"},
          {"constraints", {"constraints.geojson"}},
          {"extent", "extent.geojson"},
          {"training_parcels", "training_urban.geojson"},
          {"reference_parcels", "reference_urban.geojson"},
          {"reference_residential", "reference_residential.geojson"},
          {"regions", "regions.geojson"},
          {"buildings", "buildings.geojson"}}},
        {"roads",
         {{"widths", {{"primary", 12}, {"secondary", 8}, {"residential", 4}, {"service", 3}}},
          {"trim_threshold", 200},
          {"extension", 20}}},
        {"calibration", {{"features", {"ln_area", "center_distance", "poi_density_norm"}}, {"distance_unit", "km"}}},
        {"ca", {{"threshold", 0.5}, {"beta", 1.0}, {"neighbor_radius", 500}, {"area_budget", 1.0e7}}},
        {"synthesis", {{"working_age", 16}, {"jitter", true}}},
    };
    std::ofstream out(dir + "/config.json");
    out << c.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_toy_city <out_dir>\n";
        return 1;
    }
    const std::string dir = argv[1];
    std::filesystem::create_directories(dir);
    roads(dir);
    pois(dir);
    admin(dir);
    constraints(dir);
    census(dir);
    validation_layers(dir);
    config(dir);
    return 0;
}
