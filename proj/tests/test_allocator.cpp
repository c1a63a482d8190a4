#include "support.hpp"

#include "parcelpop/allocator.hpp"
#include "parcelpop/error.hpp"

#include <doctest.h>

#include <numeric>

using namespace parcelpop;
using namespace testsupport;

namespace {

DensityRecord rec(std::int64_t id, std::optional<AdminId> admin, double area, double density) {
    return {id, admin, area, density};
}

AdminUnit unit(AdminId id, std::int64_t pop) {
    AdminUnit u;
    u.id = id;
    u.total_population = pop;
    return u;
}

} // namespace

TEST_CASE("selection is greedy by density and stops at the first misfit") {
    const std::vector<DensityRecord> urban = {rec(3, 1, 10, 0.9), rec(7, 1, 30, 0.7), rec(5, 1, 20, 0.7),
                                              rec(1, 1, 5, 0.2)};
    const auto s = select_residential(urban, 35);
    CHECK(s.selected == std::vector<std::int64_t>{3, 5});
    CHECK(s.selected_area == 30);
    CHECK(s.warnings.empty());
    const auto all = select_residential(urban, 1e9);
    CHECK(all.selected == std::vector<std::int64_t>{3, 5, 7, 1});
    CHECK(all.selected_area == 65);
}

TEST_CASE("selection with a budget below the densest parcel warns") {
    const auto s = select_residential({rec(0, 1, 500, 0.5), rec(1, 1, 10, 0.1)}, 100);
    CHECK(s.selected.empty());
    CHECK(s.warnings.size() == 1);
    CHECK_THROWS_AS(select_residential({}, 100), InputError);
}

TEST_CASE("selected area never exceeds the budget") {
    CounterRng rng(stream_key({12}));
    std::vector<DensityRecord> urban;
    for (int i = 0; i < 300; ++i) urban.push_back(rec(i, 1, 1000 + 50000 * rng.uniform(), rng.uniform()));
    for (double budget : {1e4, 1e5, 1e6, 5e6}) {
        const auto s = select_residential(urban, budget);
        CHECK(s.selected_area <= budget);
        double sum = 0;
        for (auto id : s.selected) sum += urban[static_cast<std::size_t>(id)].area;
        CHECK(sum == doctest::Approx(s.selected_area));
    }
}

TEST_CASE("largest remainder hand cases") {
    CHECK(largest_remainder(10, {1, 1, 1}) == std::vector<std::int64_t>{4, 3, 3});
    CHECK(largest_remainder(7, {0.5, 0.3, 0.2}) == std::vector<std::int64_t>{4, 2, 1});
    CHECK(largest_remainder(0, {2, 5}) == std::vector<std::int64_t>{0, 0});
    CHECK(largest_remainder(5, {0, 1, 0}) == std::vector<std::int64_t>{0, 5, 0});
    CHECK(largest_remainder(1, {1, 1, 1, 1}) == std::vector<std::int64_t>{1, 0, 0, 0});
}

TEST_CASE("largest remainder sums exactly and stays within one of the quota") {
    CounterRng rng(stream_key({99, 1}));
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 40));
        const auto total = rng.uniform_int(0, 1000000);
        std::vector<double> w(n);
        for (auto& x : w) x = rng.uniform() < 0.1 ? 0.0 : rng.uniform();
        if (std::accumulate(w.begin(), w.end(), 0.0) == 0) w[0] = 1;
        const auto c = largest_remainder(total, w);
        const double sum_w = std::accumulate(w.begin(), w.end(), 0.0);
        CHECK(std::accumulate(c.begin(), c.end(), std::int64_t{0}) == total);
        for (std::size_t i = 0; i < n; ++i) {
            const double quota = static_cast<double>(total) * w[i] / sum_w;
            CHECK(c[i] >= 0);
            CHECK(std::abs(static_cast<double>(c[i]) - quota) < 1.0);
            if (w[i] == 0) CHECK(c[i] == 0);
        }
    }
}

TEST_CASE("allocation weights by density times area") {
    const std::vector<AdminUnit> units = {unit(2, 1000), unit(1, 7)};
    const std::vector<DensityRecord> res = {rec(11, 2, 200, 0.25), rec(10, 2, 100, 0.5), rec(4, 1, 10, 0.5),
                                            rec(5, 1, 10, 0.3), rec(6, 1, 10, 0.2)};
    const auto a = allocate_population(units, res);
    REQUIRE(a.rows.size() == 5);
    CHECK(a.rows[0].admin_id == 1);
    CHECK(a.rows[0].parcel_id == 4);
    CHECK(a.rows[0].population == 4);
    CHECK(a.rows[1].population == 2);
    CHECK(a.rows[2].population == 1);
    CHECK(a.rows[3].parcel_id == 10);
    CHECK(a.rows[3].population == 500);
    CHECK(a.rows[4].population == 500);
    CHECK(a.rows[0].share == doctest::Approx(3.5));
    CHECK(a.total() == 1007);

    const auto d = allocate_population(units, res, WeightMode::Density);
    CHECK(d.rows[3].population == 667);
    CHECK(d.rows[4].population == 333);
}

TEST_CASE("every unit total is preserved") {
    CounterRng rng(stream_key({4, 4}));
    std::vector<AdminUnit> units;
    std::vector<DensityRecord> res;
    std::int64_t id = 0;
    for (AdminId u = 1; u <= 6; ++u) {
        units.push_back(unit(u, rng.uniform_int(1, 50000)));
        for (int k = 0; k < 15; ++k) res.push_back(rec(id++, u, 1000 + 9000 * rng.uniform(), 0.05 + rng.uniform()));
    }
    const auto a = allocate_population(units, res);
    for (const auto& u : units) {
        std::int64_t s = 0;
        for (const auto& r : a.rows)
            if (r.admin_id == u.id) s += r.population;
        CHECK(s == u.total_population);
    }
    for (std::size_t i = 1; i < a.rows.size(); ++i)
        CHECK(std::pair(a.rows[i - 1].admin_id, a.rows[i - 1].parcel_id) < std::pair(a.rows[i].admin_id, a.rows[i].parcel_id));
}

TEST_CASE("units with population but no parcels are all named") {
    const std::vector<AdminUnit> units = {unit(1, 10), unit(2, 20), unit(3, 30), unit(4, 0)};
    const std::vector<DensityRecord> res = {rec(0, 2, 100, 0.5), rec(1, std::nullopt, 100, 0.5)};
    CHECK_THROWS_WITH_AS(allocate_population(units, res), "admin units with population but no residential parcel: 1, 3",
                         InputError);
    const std::vector<DensityRecord> flat = {rec(0, 1, 100, 0), rec(1, 2, 100, 0.5), rec(2, 3, 100, 0.1)};
    CHECK_THROWS_WITH_AS(allocate_population(units, flat), doctest::Contains("all zero: 1"), InputError);
    // A zero-population unit needs no parcel.
    CHECK(allocate_population({unit(4, 0)}, {}).rows.empty());
}

TEST_CASE("allocation CSV round-trips") {
    const auto a = allocate_population({unit(1, 12345), unit(2, 678)},
                                       {rec(0, 1, 1234.5, 0.33), rec(1, 1, 999.25, 0.91), rec(2, 2, 20, 1.0 / 3)});
    const auto dir = scratch_dir("alloc_rt");
    write_allocation_csv(dir + "/a.csv", a);
    CHECK(slurp(dir + "/a.csv").rfind("parcel_id,admin_id,density,share,population\n", 0) == 0);
    const auto back = read_allocation_csv(dir + "/a.csv");
    REQUIRE(back.rows.size() == a.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(back.rows[i].parcel_id == a.rows[i].parcel_id);
        CHECK(back.rows[i].admin_id == a.rows[i].admin_id);
        CHECK(back.rows[i].density == a.rows[i].density);
        CHECK(back.rows[i].share == a.rows[i].share);
        CHECK(back.rows[i].population == a.rows[i].population);
    }
}
