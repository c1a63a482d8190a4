#include "support.hpp"

#include "parcelpop/error.hpp"
#include "parcelpop/metrics.hpp"

#include <doctest.h>

#include <algorithm>

using namespace parcelpop;
using namespace testsupport;

namespace {

Agent agent(std::int64_t aid, std::int64_t age, std::string sex, std::int64_t income, std::int64_t parcel, double tam) {
    Agent a;
    a.aid = aid;
    a.age = age;
    a.sex = std::move(sex);
    a.marriage = "Single";
    a.education = "Basic";
    a.job = "Office";
    a.income = income;
    a.familyn = "2";
    a.parcel = parcel;
    a.tam = tam;
    return a;
}

std::vector<Agent> random_agents(std::size_t n, std::uint64_t seed) {
    CounterRng rng(stream_key({seed, 0x51}));
    std::vector<Agent> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(agent(static_cast<std::int64_t>(i) + 1, rng.uniform_int(0, 90), rng.uniform() < 0.5 ? "Male" : "Female",
                            rng.uniform_int(0, 9000), rng.uniform_int(0, 5), 100.0 * static_cast<double>(rng.uniform_int(0, 5))));
    return out;
}

} // namespace

TEST_CASE("an agent set is fully similar to itself and to any shuffle of it") {
    const auto a = random_agents(500, 1);
    CHECK(similarity_index(a, a).index == 1.0);
    auto b = a;
    std::reverse(b.begin(), b.end());
    for (std::size_t i = 0; i < b.size(); ++i) b[i].aid = 1000 + static_cast<std::int64_t>(i);
    const auto r = similarity_index(a, b);
    CHECK(r.index == 1.0);
    for (double v : r.per_attribute) CHECK(v == 1.0);
}

TEST_CASE("similarity example with tolerances") {
    const std::vector<Agent> a = {agent(1, 30, "Male", 2000, 1, 50), agent(2, 40, "Female", 3000, 2, 75)};
    const std::vector<Agent> b = {agent(7, 32, "Male", 2600, 1, 51), agent(8, 43, "Male", 3500, 2, 75)};
    const auto r = similarity_index(a, b);
    // Pair 1: age within 2, income off by 600, tam within 1.
    // Pair 2: age off by 3, sex differs, income within 500.
    CHECK(r.per_attribute[0] == 0.5);
    CHECK(r.per_attribute[1] == 0.5);
    CHECK(r.per_attribute[5] == 0.5);
    CHECK(r.per_attribute[8] == 1.0);
    CHECK(r.index == doctest::Approx(15.0 / 18.0));
    SimilarityOptions strict;
    strict.age_tolerance = 0;
    strict.income_tolerance = 0;
    strict.tam_tolerance = 0;
    CHECK(similarity_index(a, b, strict).index == doctest::Approx(12.0 / 18.0));
}

TEST_CASE("similarity is symmetric, bounded and handles empty sets") {
    const auto a = random_agents(300, 2);
    const auto b = random_agents(300, 3);
    const auto ab = similarity_index(a, b).index;
    CHECK(ab == similarity_index(b, a).index);
    CHECK(ab >= 0);
    CHECK(ab <= 1);
    CHECK(ab < 1);
    CHECK(similarity_index({}, {}).index == 1.0);
    CHECK_THROWS_AS(similarity_index(a, random_agents(299, 3)), InputError);
}

TEST_CASE("area overlap ratio") {
    const std::vector<Polygon> a = {make_rect(0, 0, 100, 100), make_rect(50, 0, 150, 100)};
    const std::vector<Polygon> b = {make_rect(100, 0, 300, 100)};
    CHECK(area_overlap_ratio(a, b) == doctest::Approx(50.0 / 150.0));
    CHECK(area_overlap_ratio(b, a) == doctest::Approx(50.0 / 200.0));
    CHECK(area_overlap_ratio(a, a) == doctest::Approx(1.0));
    CHECK(area_overlap_ratio(a, {make_rect(500, 500, 600, 600)}) == 0.0);
    CHECK(area_overlap_ratio(a, {}) == 0.0);
    CHECK_THROWS_AS(area_overlap_ratio({}, a), InputError);
}

TEST_CASE("pearson against hand values") {
    CHECK(pearson({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
    CHECK(pearson({1, 2, 3, 4}, {8, 6, 4, 2}) == doctest::Approx(-1.0));
    CHECK(pearson({1, 2, 3}, {1, 3, 2}) == doctest::Approx(0.5));
    CHECK(pearson({1, 2, 3, 4, 5}, {2, 1, 4, 3, 5}) == doctest::Approx(0.8));
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), InputError);
    CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), InputError);
    CHECK_THROWS_AS(pearson({1}, {1}), InputError);
}

TEST_CASE("pearson survives a large offset") {
    std::vector<double> x, y;
    for (int i = 0; i < 100; ++i) {
        x.push_back(1e9 + i);
        y.push_back(3.0 * i + std::sin(i));
    }
    std::vector<double> x0;
    for (double v : x) x0.push_back(v - 1e9);
    const auto r = pearson(x, y);
    CHECK(r == doctest::Approx(pearson(x0, y)).epsilon(1e-9));
    CHECK(r <= 1.0);
}

TEST_CASE("subregion distribution apportions straddling parcels") {
    const std::vector<Polygon> parcels = {make_rect(0, 0, 100, 100), make_rect(150, 0, 250, 100), make_rect(900, 900, 950, 950)};
    const std::vector<Polygon> regions = {make_rect(0, 0, 200, 200), make_rect(200, 0, 400, 200)};
    const auto d = subregion_distribution(parcels, regions);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == doctest::Approx(10000 + 5000));
    CHECK(d[1] == doctest::Approx(5000));
    Polygon ring = make_rect(-100, -100, 300, 300);
    ring.inners().push_back(make_rect(0, 0, 200, 200).outer());
    bg::correct(ring);
    const auto h = subregion_distribution(parcels, {ring});
    CHECK(h[0] == doctest::Approx(5000));
}
