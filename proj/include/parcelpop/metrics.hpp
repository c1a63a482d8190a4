#pragma once

// Validation metrics: agent-set similarity, parcel overlap, Pearson
// correlation and area distribution across sub-regions.

#include "parcelpop/geometry.hpp"
#include "parcelpop/parcelizer.hpp"
#include "parcelpop/synthesizer.hpp"

#include <array>
#include <vector>

namespace parcelpop {

// Ratio attributes match when |a - b| <= tolerance.
struct SimilarityOptions {
    double age_tolerance = 2;       // years
    double income_tolerance = 500;  // currency units per month
    double tam_tolerance = 1;       // m
};

struct SimilarityResult {
    double index = 0;                                  // in [0, 1]
    std::array<double, kAttributeCount> per_attribute{};  // match rate by order index - 1
};

// Both sets are sorted by PARCEL then the remaining attributes in order
// 1..9 (AID ignored) and compared pairwise. Throws InputError on a size
// mismatch.
SimilarityResult similarity_index(const std::vector<Agent>& a, const std::vector<Agent>& b,
                                  const SimilarityOptions& opts = {});

// area(union(A) ∩ union(B)) / area(union(A)). Throws InputError if A has no area.
double area_overlap_ratio(const std::vector<Polygon>& a, const std::vector<Polygon>& b);

// Product-moment correlation. Throws InputError for mismatched or short
// inputs and for a constant vector.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Parcel area falling in each region, apportioned by intersection.
std::vector<double> subregion_distribution(const std::vector<Polygon>& parcels,
                                           const std::vector<Polygon>& regions);

} // namespace parcelpop
