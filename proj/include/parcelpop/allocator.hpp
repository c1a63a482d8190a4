#pragma once

// Residential parcel selection and proportional population allocation.

#include "parcelpop/geodata.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace parcelpop {

struct DensityRecord {
    std::int64_t parcel_id = 0;
    std::optional<AdminId> admin_id;
    double area = 0;
    double density = 0;   // standardized residential density
};

struct SelectionResult {
    std::vector<std::int64_t> selected;   // in selection order
    double selected_area = 0;
    std::vector<std::string> warnings;
};

// Greedy by descending density (ties: lower parcel id) until the next
// parcel would exceed the budget. Throws InputError for an empty set.
SelectionResult select_residential(const std::vector<DensityRecord>& urban, double budget);

enum class WeightMode {
    DensityTimesArea,
    Density,
};

struct AllocationRow {
    std::int64_t parcel_id = 0;
    AdminId admin_id = 0;
    double density = 0;
    double share = 0;            // real-valued quota
    std::int64_t population = 0;
};

struct ResidentialAllocation {
    std::vector<AllocationRow> rows;   // ordered by (admin_id, parcel_id)

    std::int64_t total() const;
};

// Largest-remainder apportionment of `total` over `weights`; ties in the
// remainder go to the lower index. Sum is exactly `total`.
std::vector<std::int64_t> largest_remainder(std::int64_t total, const std::vector<double>& weights);

// Split each unit's total over its residential parcels. Throws InputError
// listing every unit with population but no usable parcel.
ResidentialAllocation allocate_population(const std::vector<AdminUnit>& units,
                                          const std::vector<DensityRecord>& residential,
                                          WeightMode mode = WeightMode::DensityTimesArea);

void write_allocation_csv(const std::string& path, const ResidentialAllocation& alloc);
ResidentialAllocation read_allocation_csv(const std::string& path);

} // namespace parcelpop
