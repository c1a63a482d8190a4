#include "parcelpop/geodata.hpp"
#include "parcelpop/csv.hpp"
#include "parcelpop/error.hpp"
#include "parcelpop/geojson.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace parcelpop {

using geojson::json;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() &&
           lower(s.substr(s.size() - suffix.size())) == suffix;
}

std::optional<std::int64_t> int_property(const json& props, const char* key) {
    if (!props.contains(key)) return std::nullopt;
    const auto& v = props[key];
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::floor(d) == d) return static_cast<std::int64_t>(d);
    }
    if (v.is_string()) return csv::parse_int(v.get<std::string>(), key);
    throw InputError(std::string("property '") + key + "' is not an integer");
}

std::optional<double> number_property(const json& props, const char* key) {
    if (!props.contains(key) || props[key].is_null()) return std::nullopt;
    const auto& v = props[key];
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return csv::parse_double(v.get<std::string>(), key);
    throw InputError(std::string("property '") + key + "' is not a number");
}

void require_file(const std::string& path) {
    if (!std::filesystem::exists(path)) throw InputError("file not found: '" + path + "'");
}

} // namespace

// ---------------------------------------------------------------- roads

void ClassWidthMap::validate() const {
    auto check = [](const std::string& name, double w) {
        if (!(w >= kMinHalfWidth && w <= kMaxHalfWidth))
            throw InputError("road class '" + name + "': half-width " + csv::format_double(w) +
                             " m outside [2, 30] m");
    };
    for (const auto& [name, w] : widths) check(name, w);
    if (default_width) check("<default>", *default_width);
}

std::optional<double> ClassWidthMap::lookup(const std::string& road_class) const {
    if (auto it = widths.find(road_class); it != widths.end()) return it->second;
    return default_width;
}

RoadNetwork load_roads(const std::string& path, const ClassWidthMap& widths) {
    require_file(path);
    widths.validate();
    RoadNetwork net;
    net.report.source = path;
    const auto features = geojson::read_features(path);
    net.report.input_count = features.size();
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        try {
            if (f.geometry.is_null()) throw InputError("null geometry");
            auto lines = geojson::to_polylines(f.geometry);
            std::string cls;
            if (f.properties.contains("road_class") && f.properties["road_class"].is_string())
                cls = f.properties["road_class"].get<std::string>();
            else if (f.properties.contains("highway") && f.properties["highway"].is_string())
                cls = f.properties["highway"].get<std::string>();
            if (!widths.lookup(cls))
                throw InputError("unknown road_class '" + cls + "' and no default width");
            const auto id = int_property(f.properties, "id").value_or(static_cast<std::int64_t>(i));
            for (auto& line : lines) {
                bg::unique(line);
                if (line.size() < 2) throw InputError("line has fewer than 2 distinct vertices");
            }
            for (auto& line : lines) net.segments.push_back({id, std::move(line), cls});
            ++net.report.accepted;
        } catch (const InputError& e) {
            ++net.report.rejected;
            net.report.errors.push_back("feature " + std::to_string(i) + ": " + e.what());
        }
    }
    if (features.empty()) net.report.warnings.push_back(path + ": empty road collection");
    return net;
}

void write_roads(const std::string& path, const RoadNetwork& network) {
    std::vector<json> feats;
    for (const auto& s : network.segments)
        feats.push_back(geojson::feature(geojson::from_polyline(s.geometry),
                                         {{"id", s.id}, {"road_class", s.road_class}}));
    geojson::write_file(path, geojson::collection(std::move(feats)));
}

// ----------------------------------------------------------------- POIs

namespace {
constexpr std::array<std::string_view, kPoiCategoryCount> kPoiNames = {
    "RES", "COM", "FIR", "TRA", "GOV", "EDU", "GRE", "OTH"};
}

std::string_view to_string(PoiCategory c) { return kPoiNames[static_cast<std::size_t>(c)]; }

std::optional<PoiCategory> parse_poi_category(std::string_view s) {
    const auto u = upper(s);
    for (std::size_t i = 0; i < kPoiNames.size(); ++i)
        if (u == kPoiNames[i]) return static_cast<PoiCategory>(i);
    return std::nullopt;
}

std::size_t POISet::count(PoiCategory c) const {
    return static_cast<std::size_t>(
        std::count_if(pois.begin(), pois.end(), [c](const POI& p) { return p.category == c; }));
}

namespace {

PoiCategory category_or_other(const std::string& raw, std::size_t row, LoadReport& report) {
    if (auto c = parse_poi_category(raw)) return *c;
    report.warnings.push_back("record " + std::to_string(row) + ": unknown category '" + raw +
                              "' mapped to OTH");
    return PoiCategory::OTH;
}

POISet load_pois_csv(const std::string& path) {
    POISet set;
    set.report.source = path;
    const auto table = csv::read_file(path);
    if (table.header.empty()) return set;
    const int id_col = table.column("id");
    const auto x_col = table.require_column("x", path);
    const auto y_col = table.require_column("y", path);
    const auto cat_col = table.require_column("category", path);
    set.report.input_count = table.rows.size();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        try {
            auto field = [&](std::size_t c) -> std::string {
                return c < row.size() ? row[c] : std::string();
            };
            if (field(x_col).empty() || field(y_col).empty())
                throw InputError("missing coordinates");
            POI poi;
            poi.id = id_col >= 0 && !field(id_col).empty() ? csv::parse_int(field(id_col), "id")
                                                           : static_cast<std::int64_t>(r);
            const double x = csv::parse_double(field(x_col), "x");
            const double y = csv::parse_double(field(y_col), "y");
            if (!std::isfinite(x) || !std::isfinite(y)) throw InputError("non-finite coordinate");
            poi.location = {x, y};
            poi.category = category_or_other(field(cat_col), r, set.report);
            set.pois.push_back(poi);
            ++set.report.accepted;
        } catch (const InputError& e) {
            ++set.report.rejected;
            set.report.errors.push_back("record " + std::to_string(r) + ": " + e.what());
        }
    }
    return set;
}

POISet load_pois_geojson(const std::string& path) {
    POISet set;
    set.report.source = path;
    const auto features = geojson::read_features(path);
    set.report.input_count = features.size();
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        try {
            if (f.geometry.is_null()) throw InputError("missing coordinates");
            POI poi;
            poi.location = geojson::to_point(f.geometry);
            poi.id = int_property(f.properties, "id").value_or(static_cast<std::int64_t>(i));
            std::string cat;
            if (f.properties.contains("category") && f.properties["category"].is_string())
                cat = f.properties["category"].get<std::string>();
            poi.category = category_or_other(cat, i, set.report);
            set.pois.push_back(poi);
            ++set.report.accepted;
        } catch (const InputError& e) {
            ++set.report.rejected;
            set.report.errors.push_back("feature " + std::to_string(i) + ": " + e.what());
        }
    }
    return set;
}

} // namespace

POISet load_pois(const std::string& path) {
    require_file(path);
    if (ends_with(path, ".csv")) return load_pois_csv(path);
    return load_pois_geojson(path);
}

void write_pois_csv(const std::string& path, const POISet& set) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    csv::write_row(out, {"id", "x", "y", "category"});
    for (const auto& p : set.pois)
        csv::write_row(out, {std::to_string(p.id), csv::format_double(p.location.x()),
                             csv::format_double(p.location.y()), std::string(to_string(p.category))});
}

std::size_t flag_outside(POISet& set, const Polygon& extent) {
    std::size_t n = 0;
    for (auto& p : set.pois) {
        p.outside_extent = !bg::covered_by(p.location, extent);
        n += p.outside_extent;
    }
    if (n) set.report.warnings.push_back(std::to_string(n) + " POIs lie outside the extent");
    return n;
}

// ---------------------------------------------------------- admin units

namespace {

Polygon single_polygon(const json& geometry) {
    auto mp = geojson::to_multipolygon(geometry);
    if (mp.size() != 1) throw InputError("expected a single polygon");
    std::string reason;
    if (!bg::is_valid(mp.front(), reason)) throw InputError("invalid polygon: " + reason);
    return mp.front();
}

} // namespace

AdminUnits load_admin_units(const std::string& path) {
    require_file(path);
    AdminUnits out;
    out.report.source = path;
    const auto features = geojson::read_features(path);
    out.report.input_count = features.size();
    std::set<AdminId> seen;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        try {
            AdminUnit u;
            u.boundary = single_polygon(f.geometry);
            u.id = int_property(f.properties, "id").value_or(static_cast<AdminId>(i));
            if (u.id < 0) throw InputError("admin id must be non-negative");
            if (!seen.insert(u.id).second) throw InputError("duplicate admin id " + std::to_string(u.id));
            if (f.properties.contains("name") && f.properties["name"].is_string())
                u.name = f.properties["name"].get<std::string>();
            u.total_population = int_property(f.properties, "total_population").value_or(0);
            if (u.total_population < 0) throw InputError("negative total_population");
            u.residential_area_budget = number_property(f.properties, "residential_area_budget");
            out.units.push_back(std::move(u));
            ++out.report.accepted;
        } catch (const InputError& e) {
            ++out.report.rejected;
            out.report.errors.push_back("feature " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------- constraints

std::string_view to_string(ConstraintKind k) {
    return k == ConstraintKind::Water ? "water" : "steep_slope";
}

std::optional<ConstraintKind> parse_constraint_kind(std::string_view s) {
    const auto l = lower(s);
    if (l == "water") return ConstraintKind::Water;
    if (l == "steep_slope") return ConstraintKind::SteepSlope;
    return std::nullopt;
}

std::vector<ConstraintLayer> load_constraints(const std::string& path, double slope_threshold_deg,
                                              LoadReport* report) {
    require_file(path);
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    rep.source = path;
    const auto features = geojson::read_features(path);
    rep.input_count += features.size();
    ConstraintLayer water{ConstraintKind::Water, {}};
    ConstraintLayer slope{ConstraintKind::SteepSlope, {}};
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        try {
            std::string kind_name;
            if (f.properties.contains("kind") && f.properties["kind"].is_string())
                kind_name = f.properties["kind"].get<std::string>();
            const auto kind = parse_constraint_kind(kind_name);
            if (!kind) throw InputError("constraint kind '" + kind_name + "' is not water or steep_slope");
            auto mp = geojson::to_multipolygon(f.geometry);
            std::string reason;
            if (!bg::is_valid(mp, reason)) throw InputError("invalid polygon: " + reason);
            ++rep.accepted;
            if (*kind == ConstraintKind::SteepSlope) {
                const auto deg = number_property(f.properties, "slope_deg");
                if (deg && *deg <= slope_threshold_deg) {
                    rep.warnings.push_back("feature " + std::to_string(i) +
                                           ": slope below threshold, ignored");
                    continue;
                }
            }
            auto& layer = *kind == ConstraintKind::Water ? water : slope;
            for (auto& p : mp) layer.geometry.push_back(std::move(p));
        } catch (const InputError& e) {
            ++rep.rejected;
            rep.errors.push_back("feature " + std::to_string(i) + ": " + e.what());
        }
    }
    std::vector<ConstraintLayer> out;
    for (auto* layer : {&slope, &water}) {
        if (layer->geometry.empty()) continue;
        std::vector<Polygon> parts(layer->geometry.begin(), layer->geometry.end());
        layer->geometry = union_all(parts);
        out.push_back(std::move(*layer));
    }
    return out;
}

// --------------------------------------------------------------- census

namespace {
constexpr std::array<std::string_view, kAttributeCount> kAttributeNames = {
    "AGE", "SEX", "MARRIAGE", "EDUCATION", "JOB", "INCOME", "FAMILYN", "PARCEL", "TAM"};

constexpr double kUnitSumSlack = 1e-12;

void normalize_in_place(std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    if (std::abs(s - 1.0) <= kUnitSumSlack) return;
    for (double& x : v) x /= s;
}

std::string attr_label(Attribute a) {
    return std::string(to_string(a)) + " (attribute order " + std::to_string(order_index(a)) + ")";
}

} // namespace

std::string_view to_string(Attribute a) {
    return kAttributeNames[static_cast<std::size_t>(order_index(a) - 1)];
}

std::optional<Attribute> parse_attribute(std::string_view s) {
    const auto u = upper(s);
    if (u == "FAMILYLN") return Attribute::FamilyN;
    for (std::size_t i = 0; i < kAttributeNames.size(); ++i)
        if (u == kAttributeNames[i]) return static_cast<Attribute>(i + 1);
    return std::nullopt;
}

std::optional<std::size_t> Distribution::index_of(std::string_view category) const {
    for (std::size_t i = 0; i < categories.size(); ++i)
        if (categories[i] == category) return i;
    return std::nullopt;
}

const Distribution& UnitTables::marginal(Attribute a) const {
    auto it = marginals.find(a);
    if (it == marginals.end()) throw InputError("no marginal table for " + attr_label(a));
    return it->second;
}

const CrossTab* UnitTables::crosstab(Attribute parent, Attribute child) const {
    for (const auto& ct : crosstabs)
        if (ct.parent == parent && ct.child == child) return &ct;
    return nullptr;
}

const UnitTables& CensusTables::for_unit(AdminId id) const {
    if (auto it = units.find(id); it != units.end()) return it->second;
    if (auto it = units.find(kCityWide); it != units.end()) return it->second;
    throw InputError("census has no tables for admin unit " + std::to_string(id) +
                     " and no city-wide tables");
}

bool CensusTables::has_unit(AdminId id) const { return units.count(id) > 0; }

std::optional<Band> parse_band(std::string_view label) {
    const auto dash = label.find('-', 1);
    if (dash == std::string_view::npos) return std::nullopt;
    try {
        Band b{csv::parse_int(label.substr(0, dash), "band"),
               csv::parse_int(label.substr(dash + 1), "band")};
        if (b.hi < b.lo) return std::nullopt;
        return b;
    } catch (const InputError&) {
        return std::nullopt;
    }
}

namespace {

struct RawCell {
    std::string category;
    std::string subcategory;
    double value;
    std::size_t line;
};

using RawKey = std::pair<Attribute, std::optional<Attribute>>;   // marginal or (parent, child)
using RawUnit = std::map<RawKey, std::vector<RawCell>>;

Distribution build_marginal(Attribute a, const std::vector<RawCell>& cells, const std::string& where) {
    Distribution d;
    for (const auto& c : cells) {
        if (d.index_of(c.category))
            throw InputError(where + ": duplicate category '" + c.category + "' in " + attr_label(a));
        d.categories.push_back(c.category);
        d.probs.push_back(c.value);
    }
    double sum = 0;
    for (double p : d.probs) sum += p;
    if (!(sum > 0)) throw InputError(where + ": marginal for " + attr_label(a) + " sums to 0");
    if (a == Attribute::Age || a == Attribute::Income)
        for (const auto& cat : d.categories)
            if (!parse_band(cat))
                throw InputError(where + ": " + attr_label(a) + " category '" + cat +
                                 "' is not an integer band like 15-19");
    normalize_in_place(d.probs);
    return d;
}

CrossTab build_crosstab(Attribute parent, Attribute child, const std::vector<RawCell>& cells,
                        const Distribution& pm, const Distribution& cm, const std::string& where) {
    const std::string name = std::string(to_string(parent)) + ":" + std::string(to_string(child));
    CrossTab ct;
    ct.parent = parent;
    ct.child = child;
    ct.rows.assign(pm.categories.size(), std::vector<double>(cm.categories.size(), 0.0));
    ct.unsampled.assign(pm.categories.size(), false);
    for (const auto& c : cells) {
        const auto r = pm.index_of(c.category);
        const auto k = cm.index_of(c.subcategory);
        if (!r)
            throw InputError(where + ": " + name + " parent category '" + c.category +
                             "' not in the " + std::string(to_string(parent)) + " marginal");
        if (!k)
            throw InputError(where + ": " + name + " child category '" + c.subcategory +
                             "' not in the " + std::string(to_string(child)) + " marginal");
        ct.rows[*r][*k] += c.value;
    }
    for (std::size_t r = 0; r < ct.rows.size(); ++r) {
        double sum = 0;
        for (double v : ct.rows[r]) sum += v;
        if (sum > 0) {
            normalize_in_place(ct.rows[r]);
        } else if (pm.probs[r] > 0) {
            throw InputError(where + ": " + name + " row '" + pm.categories[r] +
                             "' is all zero but the category has marginal mass");
        } else {
            ct.unsampled[r] = true;
        }
    }
    return ct;
}

// Fills tables missing from `unit` from `fallback`, then builds and checks
// the complete set. Throws naming the first missing table.
UnitTables complete_unit(const RawUnit& unit, const RawUnit* fallback, const std::string& where) {
    auto find = [&](const RawKey& key) -> const std::vector<RawCell>* {
        if (auto it = unit.find(key); it != unit.end()) return &it->second;
        if (fallback)
            if (auto it = fallback->find(key); it != fallback->end()) return &it->second;
        return nullptr;
    };
    UnitTables t;
    for (auto a : kTabulatedAttributes) {
        const auto* cells = find({a, std::nullopt});
        if (!cells) throw InputError(where + ": missing marginal table for " + attr_label(a));
        t.marginals.emplace(a, build_marginal(a, *cells, where));
    }
    for (auto [p, c] : kCrossTabPairs) {
        const auto* cells = find({p, c});
        if (!cells)
            throw InputError(where + ": missing cross-tabulation " + std::string(to_string(p)) + ":" +
                             std::string(to_string(c)) + " for " + attr_label(c));
        t.crosstabs.push_back(build_crosstab(p, c, *cells, t.marginals.at(p), t.marginals.at(c), where));
    }
    return t;
}

} // namespace

CensusTables parse_census(std::istream& in, const std::string& source) {
    const auto table = csv::read(in);
    CensusTables census;
    census.report.source = source;
    if (table.header.empty()) throw InputError(source + ": empty census file");
    const auto c_admin = table.require_column("admin_id", source);
    const auto c_table = table.require_column("table", source);
    const auto c_cat = table.require_column("category", source);
    const auto c_sub = table.require_column("subcategory", source);
    const auto c_val = table.require_column("value", source);

    std::map<AdminId, RawUnit> raw;
    census.report.input_count = table.rows.size();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = source + " line " + std::to_string(r + 2);
        auto field = [&](std::size_t c) { return c < row.size() ? row[c] : std::string(); };
        const auto admin_s = field(c_admin);
        const AdminId admin =
            admin_s == "*" || admin_s.empty() ? kCityWide : csv::parse_int(admin_s, where);
        const auto tname = field(c_table);
        RawKey key;
        if (auto colon = tname.find(':'); colon != std::string::npos) {
            const auto p = parse_attribute(tname.substr(0, colon));
            const auto c = parse_attribute(tname.substr(colon + 1));
            bool known = false;
            for (auto [kp, kc] : kCrossTabPairs) known |= p == kp && c == kc;
            if (!known) throw InputError(where + ": unsupported cross-tabulation '" + tname + "'");
            key = {*p, *c};
        } else {
            const auto a = parse_attribute(tname);
            if (!a || std::find(kTabulatedAttributes.begin(), kTabulatedAttributes.end(), *a) ==
                          kTabulatedAttributes.end())
                throw InputError(where + ": unknown table '" + tname + "'");
            key = {*a, std::nullopt};
        }
        const double v = csv::parse_double(field(c_val), where);
        if (!(v >= 0) || !std::isfinite(v)) throw InputError(where + ": value must be finite and >= 0");
        raw[admin][key].push_back({field(c_cat), field(c_sub), v, r + 2});
        ++census.report.accepted;
    }

    const RawUnit* city = raw.count(kCityWide) ? &raw.at(kCityWide) : nullptr;
    for (const auto& [admin, unit] : raw) {
        if (admin == kCityWide) continue;
        census.units.emplace(admin, complete_unit(unit, city, source + ": unit " + std::to_string(admin)));
    }
    if (city) {
        // City-wide tables are kept as a full fallback only when complete on
        // their own; a partial set (e.g. a survey-only INCOME table) serves
        // just to fill gaps above.
        try {
            census.units.emplace(kCityWide, complete_unit(*city, nullptr, source + ": city-wide"));
        } catch (const InputError& e) {
            if (census.units.empty()) throw;
            census.report.warnings.push_back(std::string("city-wide tables incomplete: ") + e.what());
        }
    }
    return census;
}

CensusTables load_census(const std::string& path) {
    require_file(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_census(in, path);
}

void write_census(const std::string& path, const CensusTables& census) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    csv::write_row(out, {"admin_id", "table", "category", "subcategory", "value"});
    for (const auto& [admin, t] : census.units) {
        const std::string aid = admin == kCityWide ? "*" : std::to_string(admin);
        for (const auto& [a, d] : t.marginals)
            for (std::size_t i = 0; i < d.categories.size(); ++i)
                csv::write_row(out, {aid, std::string(to_string(a)), d.categories[i], "",
                                     csv::format_double(d.probs[i])});
        for (const auto& ct : t.crosstabs) {
            const auto& pm = t.marginal(ct.parent);
            const auto& cm = t.marginal(ct.child);
            const std::string name =
                std::string(to_string(ct.parent)) + ":" + std::string(to_string(ct.child));
            for (std::size_t r = 0; r < ct.rows.size(); ++r)
                for (std::size_t k = 0; k < ct.rows[r].size(); ++k)
                    csv::write_row(out, {aid, name, pm.categories[r], cm.categories[k],
                                         csv::format_double(ct.rows[r][k])});
        }
    }
}

// ------------------------------------------------------------ city context

void CityContext::validate() const {
    if (!bg::covered_by(city_center, extent))
        throw InputError("city center (" + csv::format_double(city_center.x()) + ", " +
                         csv::format_double(city_center.y()) + ") lies outside the extent");
}

Polygon load_extent(const std::string& path) {
    require_file(path);
    const auto features = geojson::read_features(path);
    std::vector<Polygon> parts;
    for (const auto& f : features)
        for (auto& p : geojson::to_multipolygon(f.geometry)) parts.push_back(std::move(p));
    auto u = union_all(parts);
    if (u.size() != 1) throw InputError(path + ": extent must be a single polygon");
    return u.front();
}

} // namespace parcelpop
