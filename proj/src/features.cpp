#include "parcelpop/features.hpp"
#include "parcelpop/csv.hpp"
#include "parcelpop/error.hpp"
#include "parcelpop/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace parcelpop {

namespace {
constexpr double kTieTolerance = 1e-9;   // m
}

PoiAssignment assign_pois(const std::vector<Parcel>& parcels, const std::vector<POI>& pois,
                          unsigned threads) {
    PoiAssignment out;
    out.poi_count.assign(parcels.size(), 0);
    out.res_poi_count.assign(parcels.size(), 0);
    out.parcel_of.assign(pois.size(), 0);
    if (pois.empty()) return out;
    if (parcels.empty()) throw InputError("cannot assign POIs: no parcels");

    using Entry = std::pair<Box, std::size_t>;
    std::vector<Entry> boxes;
    boxes.reserve(parcels.size());
    for (std::size_t i = 0; i < parcels.size(); ++i) {
        Box b;
        bg::envelope(parcels[i].geometry, b);
        boxes.emplace_back(b, i);
    }
    const bgi::rtree<Entry, bgi::quadratic<16>> tree(boxes.begin(), boxes.end());

    auto better = [&](double d, std::size_t i, double best_d, std::size_t best) {
        if (best == SIZE_MAX) return true;
        if (d < best_d - kTieTolerance) return true;
        return std::abs(d - best_d) <= kTieTolerance && parcels[i].id < parcels[best].id;
    };

    parallel_for(pois.size(), threads, [&](std::size_t k) {
        const Point& pt = pois[k].location;
        std::size_t best = SIZE_MAX;
        // Containing parcel first.
        std::vector<Entry> hits;
        tree.query(bgi::intersects(pt), std::back_inserter(hits));
        for (const auto& [b, i] : hits)
            if (bg::covered_by(pt, parcels[i].geometry) && better(0, i, 0, best)) best = i;
        if (best == SIZE_MAX) {
            double best_d = std::numeric_limits<double>::infinity();
            for (auto it = tree.qbegin(bgi::nearest(pt, static_cast<unsigned>(parcels.size())));
                 it != tree.qend(); ++it) {
                if (bg::distance(pt, it->first) > best_d + kTieTolerance) break;
                const double d = bg::distance(pt, parcels[it->second].geometry);
                if (better(d, it->second, best_d, best)) {
                    best = it->second;
                    best_d = std::min(best_d, d);
                }
            }
        }
        out.parcel_of[k] = best;
    });
    for (std::size_t k = 0; k < pois.size(); ++k) {
        ++out.poi_count[out.parcel_of[k]];
        if (pois[k].category == PoiCategory::RES) ++out.res_poi_count[out.parcel_of[k]];
    }
    return out;
}

std::vector<double> raw_density_per_km2(const std::vector<std::int64_t>& counts,
                                        const std::vector<double>& areas_m2) {
    if (counts.size() != areas_m2.size()) throw InputError("count and area vectors differ in length");
    std::vector<double> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (!(areas_m2[i] > 0)) throw InputError("parcel area must be positive");
        const double d = static_cast<double>(counts[i]) / (areas_m2[i] / 1e6);
        out[i] = std::max(d, kDensityFloorPerKm2);
    }
    return out;
}

std::vector<double> log_ratio_standardize(const std::vector<double>& raw, double log_base) {
    std::vector<double> out(raw.size(), 1.0);
    if (raw.empty()) return out;
    const double max = *std::max_element(raw.begin(), raw.end());
    if (max <= kDensityFloorPerKm2) return out;
    const double lb = std::log(log_base);
    const double denom = std::log(max) / lb;
    for (std::size_t i = 0; i < raw.size(); ++i)
        out[i] = std::clamp((std::log(raw[i]) / lb) / denom, 0.0, 1.0);
    return out;
}

std::vector<double> normalize_poi_density(const std::vector<std::int64_t>& counts,
                                          const std::vector<double>& areas_m2) {
    return log_ratio_standardize(raw_density_per_km2(counts, areas_m2));
}

std::vector<double> residential_density_std(const std::vector<std::int64_t>& res_counts,
                                            const std::vector<double>& areas_m2, double log_base) {
    return log_ratio_standardize(raw_density_per_km2(res_counts, areas_m2), log_base);
}

double center_distance(const Polygon& parcel, const Point& center) {
    if (bg::covered_by(center, parcel)) return 0.0;
    return bg::distance(center, parcel);
}

std::vector<ParcelFeatures> compute_features(const std::vector<Parcel>& parcels,
                                             const std::vector<POI>& pois, const Point& city_center,
                                             unsigned threads) {
    const auto assign = assign_pois(parcels, pois, threads);
    std::vector<double> areas(parcels.size());
    for (std::size_t i = 0; i < parcels.size(); ++i) areas[i] = parcels[i].area;
    const auto poi_norm = normalize_poi_density(assign.poi_count, areas);
    const auto res_std = residential_density_std(assign.res_poi_count, areas);

    std::vector<ParcelFeatures> table(parcels.size());
    parallel_for(parcels.size(), threads, [&](std::size_t i) {
        const auto& p = parcels[i];
        auto& f = table[i];
        f.parcel_id = p.id;
        f.area = p.area;
        f.perimeter = p.perimeter;
        f.ln_area = std::log(p.area);
        f.compactness = p.perimeter * p.perimeter / p.area;
        f.center_distance = center_distance(p.geometry, city_center);
        f.poi_count = assign.poi_count[i];
        f.res_poi_count = assign.res_poi_count[i];
        f.poi_density_norm = poi_norm[i];
        f.residential_density_std = res_std[i];
    });
    return table;
}

namespace {
const csv::Row kFeatureHeader = {"parcel_id",        "area",          "perimeter",
                                 "ln_area",          "compactness",   "center_distance",
                                 "poi_count",        "res_poi_count", "poi_density_norm",
                                 "residential_density_std"};
}

void write_features_csv(const std::string& path, const std::vector<ParcelFeatures>& table) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    csv::write_row(out, kFeatureHeader);
    using csv::format_double;
    for (const auto& f : table)
        csv::write_row(out, {std::to_string(f.parcel_id), format_double(f.area),
                             format_double(f.perimeter), format_double(f.ln_area),
                             format_double(f.compactness), format_double(f.center_distance),
                             std::to_string(f.poi_count), std::to_string(f.res_poi_count),
                             format_double(f.poi_density_norm),
                             format_double(f.residential_density_std)});
}

std::vector<ParcelFeatures> read_features_csv(const std::string& path) {
    const auto t = csv::read_file(path);
    std::vector<std::size_t> col;
    for (const auto& name : kFeatureHeader) col.push_back(t.require_column(name, path));
    std::vector<ParcelFeatures> out;
    for (const auto& row : t.rows) {
        if (row.size() < kFeatureHeader.size()) throw InputError(path + ": short row");
        ParcelFeatures f;
        f.parcel_id = csv::parse_int(row[col[0]], path);
        f.area = csv::parse_double(row[col[1]], path);
        f.perimeter = csv::parse_double(row[col[2]], path);
        f.ln_area = csv::parse_double(row[col[3]], path);
        f.compactness = csv::parse_double(row[col[4]], path);
        f.center_distance = csv::parse_double(row[col[5]], path);
        f.poi_count = csv::parse_int(row[col[6]], path);
        f.res_poi_count = csv::parse_int(row[col[7]], path);
        f.poi_density_norm = csv::parse_double(row[col[8]], path);
        f.residential_density_std = csv::parse_double(row[col[9]], path);
        out.push_back(f);
    }
    return out;
}

} // namespace parcelpop
