#include "support.hpp"

#include "parcelpop/error.hpp"
#include "parcelpop/features.hpp"

#include <doctest.h>

#include <numbers>

using namespace parcelpop;
using namespace testsupport;

namespace {

POI poi(std::int64_t id, double x, double y, PoiCategory c = PoiCategory::COM) {
    POI p;
    p.id = id;
    p.location = Point(x, y);
    p.category = c;
    return p;
}

} // namespace

TEST_CASE("a POI inside a parcel is assigned to it") {
    const auto parcels = block_grid(2);
    const auto a = assign_pois(parcels, {poi(1, 50, 50), poi(2, 260, 300), poi(3, 150, 390, PoiCategory::RES)});
    CHECK(a.parcel_of == std::vector<std::size_t>{0, 3, 2});
    CHECK(a.poi_count == std::vector<std::int64_t>{1, 0, 1, 1});
    CHECK(a.res_poi_count == std::vector<std::int64_t>{0, 0, 1, 0});
}

TEST_CASE("a POI on a street midway between parcels goes to the lower id") {
    const auto parcels = block_grid(2);
    const auto a = assign_pois(parcels, {poi(1, 205, 100), poi(2, 100, 205), poi(3, 205, 205)});
    CHECK(a.parcel_of == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("nearest-parcel assignment agrees with brute force") {
    std::vector<Parcel> parcels = {parcel_from(0, make_rect(0, 0, 100, 100)), parcel_from(1, make_rect(130, 0, 200, 60)),
                                   parcel_from(2, make_rect(40, 150, 90, 260))};
    const std::vector<POI> pois = {poi(1, 115, 50), poi(2, 120, 140), poi(3, -30, 300), poi(4, 250, 250),
                                   poi(5, 160, 30)};
    const auto a = assign_pois(parcels, pois);
    for (std::size_t i = 0; i < pois.size(); ++i) {
        std::size_t best = 0;
        double best_d = bg::distance(pois[i].location, parcels[0].geometry);
        for (std::size_t k = 1; k < parcels.size(); ++k) {
            const double d = bg::distance(pois[i].location, parcels[k].geometry);
            if (d < best_d) best = k, best_d = d;
        }
        CHECK(a.parcel_of[i] == best);
    }
}

TEST_CASE("POI assignment is a partition and ignores thread count") {
    const auto parcels = block_grid(5);
    std::vector<POI> pois;
    CounterRng rng(stream_key({7, 11}));
    for (int i = 0; i < 400; ++i)
        pois.push_back(poi(i, -100 + 1250 * rng.uniform(), -100 + 1250 * rng.uniform(),
                           i % 3 ? PoiCategory::COM : PoiCategory::RES));
    const auto a = assign_pois(parcels, pois, 1);
    const auto b = assign_pois(parcels, pois, 3);
    CHECK(a.parcel_of == b.parcel_of);
    std::int64_t total = 0, res = 0;
    for (std::size_t k = 0; k < parcels.size(); ++k) {
        total += a.poi_count[k];
        res += a.res_poi_count[k];
        CHECK(a.res_poi_count[k] <= a.poi_count[k]);
    }
    CHECK(total == 400);
    CHECK(res == 134);
}

TEST_CASE("POIs without parcels are an input error") {
    CHECK_THROWS_AS(assign_pois({}, {poi(1, 0, 0)}), InputError);
    CHECK(assign_pois({}, {}).parcel_of.empty());
}

TEST_CASE("log-ratio density maps the maximum to 1 and the floor to 0") {
    const std::vector<double> areas(3, 1e6);
    const auto d = normalize_poi_density({100, 0, 10}, areas);
    CHECK(d[0] == doctest::Approx(1.0));
    CHECK(d[1] == doctest::Approx(0.0));
    CHECK(d[2] == doctest::Approx(0.5));
}

TEST_CASE("raw density is per square kilometre and floored") {
    const auto raw = raw_density_per_km2({3, 0, 1}, {5e5, 2e6, 4e6});
    CHECK(raw[0] == doctest::Approx(6.0));
    CHECK(raw[1] == kDensityFloorPerKm2);
    CHECK(raw[2] == kDensityFloorPerKm2);
}

TEST_CASE("log-ratio standardization does not depend on the log base") {
    const std::vector<double> raw = {1, 2.5, 17, 300, 42.42};
    const auto e = log_ratio_standardize(raw);
    for (double base : {2.0, 10.0, 1.5}) {
        const auto b = log_ratio_standardize(raw, base);
        for (std::size_t i = 0; i < raw.size(); ++i) CHECK(std::abs(b[i] - e[i]) < 1e-12);
    }
}

TEST_CASE("log-ratio standardization preserves order and stays in [0, 1]") {
    std::vector<double> raw;
    CounterRng rng(stream_key({3}));
    for (int i = 0; i < 200; ++i) raw.push_back(std::exp(8 * rng.uniform()));
    const auto s = log_ratio_standardize(raw);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        CHECK(s[i] >= 0);
        CHECK(s[i] <= 1);
        for (std::size_t j = 0; j < raw.size(); ++j)
            if (raw[i] < raw[j]) CHECK(s[i] <= s[j]);
    }
}

TEST_CASE("all-floor densities standardize to 1") {
    const auto d = normalize_poi_density({0, 0, 0}, {1e6, 2e6, 3e6});
    for (double v : d) CHECK(v == 1.0);
}

TEST_CASE("center distance is zero inside and Euclidean outside") {
    const auto sq = make_rect(100, 100, 200, 200);
    CHECK(center_distance(sq, Point(150, 150)) == 0.0);
    CHECK(center_distance(sq, Point(0, 0)) == doctest::Approx(141.4213562373));
    CHECK(center_distance(sq, Point(150, 0)) == doctest::Approx(100));
}

TEST_CASE("compute_features fills every column") {
    auto parcels = block_grid(3);
    parcels.push_back(parcel_from(9, make_rect(700, 0, 710, 400)));
    const std::vector<POI> pois = {poi(1, 100, 100, PoiCategory::RES), poi(2, 110, 100, PoiCategory::RES),
                                   poi(3, 300, 300), poi(4, 705, 200, PoiCategory::RES)};
    const auto f = compute_features(parcels, pois, Point(315, 315));
    REQUIRE(f.size() == parcels.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(f[i].parcel_id == parcels[i].id);
        CHECK(f[i].ln_area == doctest::Approx(std::log(parcels[i].area)));
        CHECK(f[i].compactness >= 4 * std::numbers::pi - 1e-9);
    }
    CHECK(f[0].compactness == doctest::Approx(16));
    CHECK(f[9].compactness == doctest::Approx(820.0 * 820.0 / 4000.0));
    CHECK(f[4].center_distance == 0);
    CHECK(f[0].center_distance == doctest::Approx(std::hypot(115, 115)));
    CHECK(f[0].poi_count == 2);
    CHECK(f[0].res_poi_count == 2);
    CHECK(f[4].poi_count == 1);
    CHECK(f[4].res_poi_count == 0);
    // Parcel 9 holds one RES POI on 4000 m², the densest by far.
    CHECK(f[9].residential_density_std == doctest::Approx(1.0));
    CHECK(f[9].poi_density_norm == doctest::Approx(1.0));
    CHECK(f[1].residential_density_std == 0.0);
    const double dense0 = std::log(2 / 0.04) / std::log(1 / 0.004);
    CHECK(f[0].residential_density_std == doctest::Approx(dense0));
}

TEST_CASE("features CSV round-trips") {
    const auto parcels = block_grid(3);
    const auto f = compute_features(parcels, {poi(1, 100, 100), poi(2, 520, 520, PoiCategory::RES)}, Point(0, 0));
    const auto dir = scratch_dir("features_rt");
    write_features_csv(dir + "/f.csv", f);
    const auto back = read_features_csv(dir + "/f.csv");
    REQUIRE(back.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(back[i].parcel_id == f[i].parcel_id);
        CHECK(back[i].area == f[i].area);
        CHECK(back[i].ln_area == f[i].ln_area);
        CHECK(back[i].compactness == f[i].compactness);
        CHECK(back[i].center_distance == f[i].center_distance);
        CHECK(back[i].poi_count == f[i].poi_count);
        CHECK(back[i].res_poi_count == f[i].res_poi_count);
        CHECK(back[i].poi_density_norm == f[i].poi_density_norm);
        CHECK(back[i].residential_density_std == f[i].residential_density_std);
    }
}
