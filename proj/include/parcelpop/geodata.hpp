#pragma once

// Input data model and loaders: roads, POIs, administrative units,
// constraint layers, census tables and the city context. All geometry is
// expected in a projected planar CRS in meters; nothing is reprojected.

#include "parcelpop/geometry.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace parcelpop {

using AdminId = std::int64_t;

// Outcome of loading one dataset. accepted + rejected == input_count.
struct LoadReport {
    std::string source;
    std::size_t input_count = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::vector<std::string> errors;    // one per rejected feature
    std::vector<std::string> warnings;
};

// ---------------------------------------------------------------- roads

inline constexpr double kMinHalfWidth = 2.0;
inline constexpr double kMaxHalfWidth = 30.0;

// road_class -> buffer half-width in meters, with optional fallback.
struct ClassWidthMap {
    std::map<std::string, double> widths;
    std::optional<double> default_width;

    // Throws InputError if a width lies outside [2, 30] m.
    void validate() const;
    std::optional<double> lookup(const std::string& road_class) const;
};

struct RoadSegment {
    std::int64_t id = 0;
    Polyline geometry;
    std::string road_class;
};

struct RoadNetwork {
    std::vector<RoadSegment> segments;
    LoadReport report;
};

RoadNetwork load_roads(const std::string& path, const ClassWidthMap& widths);
void write_roads(const std::string& path, const RoadNetwork& network);

// ----------------------------------------------------------------- POIs

enum class PoiCategory { RES, COM, FIR, TRA, GOV, EDU, GRE, OTH };
inline constexpr std::size_t kPoiCategoryCount = 8;

std::string_view to_string(PoiCategory c);
// Case-insensitive match against the eight codes; nullopt if unknown.
std::optional<PoiCategory> parse_poi_category(std::string_view s);

struct POI {
    std::int64_t id = 0;
    Point location;
    PoiCategory category = PoiCategory::OTH;
    bool outside_extent = false;
};

struct POISet {
    std::vector<POI> pois;
    LoadReport report;

    std::size_t count(PoiCategory c) const;
};

// CSV (columns id,x,y,category) or GeoJSON Point features with a
// `category` property; the format is chosen by file extension.
POISet load_pois(const std::string& path);
void write_pois_csv(const std::string& path, const POISet& set);

// Sets outside_extent on every POI not covered by `extent`; returns count.
std::size_t flag_outside(POISet& set, const Polygon& extent);

// ---------------------------------------------------------- admin units

struct AdminUnit {
    AdminId id = 0;
    std::string name;
    Polygon boundary;
    std::int64_t total_population = 0;
    std::optional<double> residential_area_budget;  // m²
};

struct AdminUnits {
    std::vector<AdminUnit> units;
    LoadReport report;
};

// Polygon features with properties id, name, total_population and optional
// residential_area_budget.
AdminUnits load_admin_units(const std::string& path);

// ---------------------------------------------------------- constraints

enum class ConstraintKind { SteepSlope, Water };

std::string_view to_string(ConstraintKind k);
std::optional<ConstraintKind> parse_constraint_kind(std::string_view s);

struct ConstraintLayer {
    ConstraintKind kind = ConstraintKind::Water;
    MultiPolygon geometry;
};

// Polygon features whose `kind` property is steep_slope or water. A
// steep_slope feature carrying a `slope_deg` property is kept only when its
// slope exceeds `slope_threshold_deg`.
std::vector<ConstraintLayer> load_constraints(const std::string& path,
                                              double slope_threshold_deg,
                                              LoadReport* report = nullptr);

// --------------------------------------------------------------- census

// Census attributes in their fixed order (1-based order index).
enum class Attribute {
    Age = 1,
    Sex = 2,
    Marriage = 3,
    Education = 4,
    Job = 5,
    Income = 6,
    FamilyN = 7,
    Parcel = 8,
    Tam = 9,
};
inline constexpr std::size_t kAttributeCount = 9;

std::string_view to_string(Attribute a);
std::optional<Attribute> parse_attribute(std::string_view s);
inline int order_index(Attribute a) { return static_cast<int>(a); }

// The seven attributes whose frequency tables come from the census (or, for
// INCOME, a survey table supplied alongside it).
inline constexpr std::array<Attribute, 7> kTabulatedAttributes = {
    Attribute::Age, Attribute::Sex, Attribute::Marriage, Attribute::Education,
    Attribute::Job, Attribute::Income, Attribute::FamilyN};

// (parent, child) pairs carried as cross-tabulations.
inline constexpr std::array<std::pair<Attribute, Attribute>, 3> kCrossTabPairs = {{
    {Attribute::Age, Attribute::Marriage},
    {Attribute::Age, Attribute::Education},
    {Attribute::Education, Attribute::Job},
}};

// A categorical distribution. Probabilities sum to 1 within 1e-9.
struct Distribution {
    std::vector<std::string> categories;
    std::vector<double> probs;

    std::optional<std::size_t> index_of(std::string_view category) const;
};

// Row-conditional table P(child | parent); rows align with the parent
// marginal's categories and columns with the child marginal's categories.
struct CrossTab {
    Attribute parent = Attribute::Age;
    Attribute child = Attribute::Marriage;
    std::vector<std::vector<double>> rows;
    // Rows whose parent category has no marginal mass; never sampled and
    // may be all zero.
    std::vector<bool> unsampled;
};

struct UnitTables {
    std::map<Attribute, Distribution> marginals;
    std::vector<CrossTab> crosstabs;

    const Distribution& marginal(Attribute a) const;
    const CrossTab* crosstab(Attribute parent, Attribute child) const;
};

// Admin id used for tables that apply to every unit without its own.
inline constexpr AdminId kCityWide = -1;

struct CensusTables {
    std::map<AdminId, UnitTables> units;
    LoadReport report;

    // Tables for a unit, falling back to the city-wide set.
    const UnitTables& for_unit(AdminId id) const;
    bool has_unit(AdminId id) const;
};

// Long-format CSV with header admin_id,table,category,subcategory,value.
// Marginal rows use table = attribute name and leave subcategory empty;
// cross-tab rows use table = "PARENT:CHILD" with category = parent value and
// subcategory = child value. admin_id "*" marks city-wide tables. Values
// may be counts or proportions.
CensusTables load_census(const std::string& path);
CensusTables parse_census(std::istream& in, const std::string& source);
void write_census(const std::string& path, const CensusTables& census);

// An integer band such as "15-19" (inclusive); used by ratio attributes.
struct Band {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};
std::optional<Band> parse_band(std::string_view label);

// ------------------------------------------------------------ city context

struct CityContext {
    Point city_center;
    Polygon extent;
    std::string crs_note;

    // Throws InputError unless the center lies inside the extent.
    void validate() const;
};

Polygon load_extent(const std::string& path);

} // namespace parcelpop
