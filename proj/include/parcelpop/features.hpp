#pragma once

// Per-parcel descriptors: size, compactness, distance to the city center,
// POI density and standardized residential density.

#include "parcelpop/geodata.hpp"
#include "parcelpop/parcelizer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace parcelpop {

struct PoiAssignment {
    std::vector<std::size_t> parcel_of;     // per POI: index into parcels
    std::vector<std::int64_t> poi_count;    // per parcel
    std::vector<std::int64_t> res_poi_count;
};

// Each POI goes to the parcel containing it, otherwise to the nearest
// parcel; equidistant ties go to the lowest parcel id. Throws InputError if
// there are POIs but no parcels.
PoiAssignment assign_pois(const std::vector<Parcel>& parcels, const std::vector<POI>& pois,
                          unsigned threads = 1);

// Zero-count and sparse parcels are floored to this density (POIs per km²).
inline constexpr double kDensityFloorPerKm2 = 1.0;

// count / area in POIs per km², floored at kDensityFloorPerKm2.
std::vector<double> raw_density_per_km2(const std::vector<std::int64_t>& counts,
                                        const std::vector<double>& areas_m2);

// log(raw) / log(max) computed in `log_base`; every value is 1.0 when the
// maximum sits at the floor. Values lie in [0, 1].
std::vector<double> log_ratio_standardize(const std::vector<double>& raw,
                                          double log_base = 2.718281828459045);

std::vector<double> normalize_poi_density(const std::vector<std::int64_t>& counts,
                                          const std::vector<double>& areas_m2);

std::vector<double> residential_density_std(const std::vector<std::int64_t>& res_counts,
                                            const std::vector<double>& areas_m2,
                                            double log_base = 2.718281828459045);

// Minimum Euclidean distance from the parcel to the center; 0 inside.
double center_distance(const Polygon& parcel, const Point& center);

struct ParcelFeatures {
    std::int64_t parcel_id = 0;
    double area = 0;
    double perimeter = 0;
    double ln_area = 0;
    double compactness = 0;          // perimeter² / area
    double center_distance = 0;      // m
    std::int64_t poi_count = 0;
    std::int64_t res_poi_count = 0;
    double poi_density_norm = 0;
    double residential_density_std = 0;
};

std::vector<ParcelFeatures> compute_features(const std::vector<Parcel>& parcels,
                                             const std::vector<POI>& pois,
                                             const Point& city_center,
                                             unsigned threads = 1);

void write_features_csv(const std::string& path, const std::vector<ParcelFeatures>& table);
std::vector<ParcelFeatures> read_features_csv(const std::string& path);

} // namespace parcelpop
