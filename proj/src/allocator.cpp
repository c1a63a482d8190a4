#include "parcelpop/allocator.hpp"
#include "parcelpop/csv.hpp"
#include "parcelpop/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace parcelpop {

SelectionResult select_residential(const std::vector<DensityRecord>& urban, double budget) {
    if (urban.empty()) throw InputError("residential selection needs at least one urban parcel");
    if (!(budget > 0)) throw InputError("residential area budget must be positive");
    std::vector<std::size_t> order(urban.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (urban[a].density != urban[b].density) return urban[a].density > urban[b].density;
        return urban[a].parcel_id < urban[b].parcel_id;
    });
    SelectionResult res;
    for (auto i : order) {
        if (res.selected_area + urban[i].area > budget) break;
        res.selected.push_back(urban[i].parcel_id);
        res.selected_area += urban[i].area;
    }
    if (res.selected.empty())
        res.warnings.push_back("residential budget is smaller than the densest parcel; nothing selected");
    return res;
}

std::int64_t ResidentialAllocation::total() const {
    std::int64_t s = 0;
    for (const auto& r : rows) s += r.population;
    return s;
}

std::vector<std::int64_t> largest_remainder(std::int64_t total, const std::vector<double>& weights) {
    if (total < 0) throw InputError("cannot apportion a negative total");
    double sum = 0;
    for (double w : weights) {
        if (!(w >= 0) || !std::isfinite(w)) throw InputError("apportionment weights must be finite and >= 0");
        sum += w;
    }
    if (weights.empty() || !(sum > 0)) throw InputError("apportionment weights sum to zero");

    const std::size_t n = weights.size();
    std::vector<std::int64_t> out(n);
    std::vector<double> rem(n);
    std::int64_t given = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = static_cast<double>(total) * (weights[i] / sum);
        const double f = std::floor(q);
        out[i] = static_cast<std::int64_t>(f);
        rem[i] = q - f;
        given += out[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    std::int64_t left = total - given;
    for (std::size_t k = 0; left > 0; k = (k + 1) % n, --left) ++out[order[k]];
    // Rounding can push the floors one past the total; take back from the smallest remainders.
    for (std::size_t k = n; left < 0; ++left) {
        do k = (k == 0 ? n : k) - 1; while (out[order[k]] == 0);
        --out[order[k]];
    }
    return out;
}

ResidentialAllocation allocate_population(const std::vector<AdminUnit>& units,
                                          const std::vector<DensityRecord>& residential, WeightMode mode) {
    std::map<AdminId, std::vector<const DensityRecord*>> by_unit;
    for (const auto& r : residential)
        if (r.admin_id) by_unit[*r.admin_id].push_back(&r);

    std::vector<const AdminUnit*> sorted;
    for (const auto& u : units) sorted.push_back(&u);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::string missing, zero;
    ResidentialAllocation alloc;
    for (const auto* u : sorted) {
        if (u->total_population == 0) continue;
        auto it = by_unit.find(u->id);
        if (it == by_unit.end() || it->second.empty()) {
            missing += (missing.empty() ? "" : ", ") + std::to_string(u->id);
            continue;
        }
        auto members = it->second;
        std::sort(members.begin(), members.end(),
                  [](auto* a, auto* b) { return a->parcel_id < b->parcel_id; });
        std::vector<double> w;
        double sum = 0;
        for (const auto* m : members) {
            w.push_back(mode == WeightMode::DensityTimesArea ? m->density * m->area : m->density);
            sum += w.back();
        }
        if (!(sum > 0)) {
            zero += (zero.empty() ? "" : ", ") + std::to_string(u->id);
            continue;
        }
        const auto counts = largest_remainder(u->total_population, w);
        for (std::size_t k = 0; k < members.size(); ++k) {
            AllocationRow row;
            row.parcel_id = members[k]->parcel_id;
            row.admin_id = u->id;
            row.density = members[k]->density;
            row.share = static_cast<double>(u->total_population) * (w[k] / sum);
            row.population = counts[k];
            alloc.rows.push_back(row);
        }
    }
    if (!missing.empty()) throw InputError("admin units with population but no residential parcel: " + missing);
    if (!zero.empty()) throw InputError("admin units whose residential weights are all zero: " + zero);
    return alloc;
}

namespace {
const csv::Row kAllocHeader = {"parcel_id", "admin_id", "density", "share", "population"};
}

void write_allocation_csv(const std::string& path, const ResidentialAllocation& alloc) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    csv::write_row(out, kAllocHeader);
    for (const auto& r : alloc.rows)
        csv::write_row(out, {std::to_string(r.parcel_id), std::to_string(r.admin_id), csv::format_double(r.density),
                             csv::format_double(r.share), std::to_string(r.population)});
}

ResidentialAllocation read_allocation_csv(const std::string& path) {
    const auto t = csv::read_file(path);
    std::vector<std::size_t> col;
    for (const auto& name : kAllocHeader) col.push_back(t.require_column(name, path));
    ResidentialAllocation alloc;
    for (const auto& row : t.rows) {
        if (row.size() < kAllocHeader.size()) throw InputError(path + ": short row");
        AllocationRow r;
        r.parcel_id = csv::parse_int(row[col[0]], path);
        r.admin_id = csv::parse_int(row[col[1]], path);
        r.density = csv::parse_double(row[col[2]], path);
        r.share = csv::parse_double(row[col[3]], path);
        r.population = csv::parse_int(row[col[4]], path);
        if (r.population < 0) throw InputError(path + ": negative population");
        alloc.rows.push_back(r);
    }
    return alloc;
}

} // namespace parcelpop
