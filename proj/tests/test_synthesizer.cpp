#include "support.hpp"

#include "parcelpop/error.hpp"
#include "parcelpop/synthesizer.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace parcelpop;
using namespace testsupport;

namespace {

CensusTables census_from(const std::string& text) {
    std::istringstream in(text);
    return parse_census(in, "test");
}

ResidentialAllocation allocation_of(std::vector<std::tuple<std::int64_t, AdminId, std::int64_t>> rows) {
    ResidentialAllocation a;
    for (auto [pid, admin, pop] : rows) {
        AllocationRow r;
        r.parcel_id = pid;
        r.admin_id = admin;
        r.population = pop;
        r.share = static_cast<double>(pop);
        r.density = 0.5;
        a.rows.push_back(r);
    }
    return a;
}

std::map<std::int64_t, double> tams(std::initializer_list<std::pair<const std::int64_t, double>> xs) { return xs; }

// |observed - p| within z standard errors of a binomial proportion.
bool near_proportion(std::size_t hits, std::size_t n, double p, double z = 4.5) {
    const double phat = static_cast<double>(hits) / static_cast<double>(n);
    return std::abs(phat - p) <= z * std::sqrt(p * (1 - p) / static_cast<double>(n)) + 1e-12;
}

} // namespace

TEST_CASE("default schema has nine ordered attributes") {
    const auto s = default_schema();
    REQUIRE(s.attributes.size() == kAttributeCount);
    for (std::size_t i = 0; i < s.attributes.size(); ++i)
        CHECK(order_index(s.attributes[i].attribute) == static_cast<int>(i) + 1);
    CHECK(s.spec(Attribute::Marriage).parent == Attribute::Age);
    CHECK(s.spec(Attribute::Education).parent == Attribute::Age);
    CHECK(s.spec(Attribute::Job).parent == Attribute::Education);
    CHECK(s.spec(Attribute::Age).kind == AttributeKind::Ratio);
    CHECK(s.spec(Attribute::Tam).source == AttributeSource::Derived);
    CHECK_NOTHROW(s.validate());
    auto bad = s;
    std::swap(bad.attributes[0], bad.attributes[2]);
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("conditionals come out row-normalized") {
    const auto plan = build_conditionals(census_from(small_census_csv()));
    const auto& job = plan.for_unit(5).at(Attribute::Job);
    REQUIRE(job.parent == Attribute::Education);
    CHECK(job.parent_categories == std::vector<std::string>{"Basic", "Higher"});
    CHECK(job.conditional[0][0] == doctest::Approx(0.25));
    CHECK(job.conditional[0][1] == doctest::Approx(0.75));
    CHECK(job.conditional[1][0] == doctest::Approx(0.5));
    const auto& mar = plan.for_unit(5).at(Attribute::Marriage);
    CHECK(mar.conditional[0] == std::vector<double>{1.0, 0.0});
    CHECK(mar.conditional[1][1] == doctest::Approx(5.0 / 7.0));
    CHECK(plan.for_unit(5).at(Attribute::Sex).marginal.probs[0] == doctest::Approx(0.51));
    const auto j = to_json(plan);
    CHECK(j.dump().find("EDUCATION") != std::string::npos);
}

TEST_CASE("a zero conditional row under a populated parent is rejected") {
    auto text = small_census_csv();
    const std::string row = "*,AGE:MARRIAGE,16-60,Married,500\n";
    text.replace(text.find(row), row.size(), "*,AGE:MARRIAGE,16-60,Married,0\n");
    const std::string single = "*,AGE:MARRIAGE,16-60,Single,200\n";
    text.replace(text.find(single), single.size(), "*,AGE:MARRIAGE,16-60,Single,0\n");
    CHECK_THROWS_WITH_AS(build_conditionals(census_from(text)), doctest::Contains("16-60"), InputError);
}

TEST_CASE("agent counts, ids, parcels and TAM follow the allocation") {
    const auto plan = build_conditionals(census_from(small_census_csv()));
    const auto alloc = allocation_of({{4, 1, 30}, {9, 1, 0}, {2, 2, 45}, {3, 2, 25}});
    const auto agents = synthesize(alloc, plan, tams({{2, 0}, {3, 1250.5}, {4, 80}, {9, 3}}), 7);
    REQUIRE(agents.size() == 100);
    std::map<std::int64_t, std::int64_t> per_parcel;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        CHECK(agents[i].aid == static_cast<std::int64_t>(i) + 1);
        ++per_parcel[agents[i].parcel];
    }
    CHECK(per_parcel == std::map<std::int64_t, std::int64_t>{{2, 45}, {3, 25}, {4, 30}});
    CHECK(agents[0].admin_id == 1);
    CHECK(agents[0].tam == 80);
    CHECK(agents[99].admin_id == 2);
    CHECK(agents[99].tam == 1250.5);
    CHECK_THROWS_AS(synthesize(alloc, plan, tams({{2, 0}}), 7), InputError);
}

TEST_CASE("synthesis is reproducible and thread independent") {
    const auto plan = build_conditionals(census_from(small_census_csv()));
    const auto alloc = allocation_of({{0, 1, 700}, {1, 1, 300}, {2, 3, 500}});
    const auto t = tams({{0, 10}, {1, 20}, {2, 30}});
    const auto a = synthesize(alloc, plan, t, 2024);
    SynthesisOptions four;
    four.threads = 4;
    CHECK(synthesize(alloc, plan, t, 2024, four) == a);
    CHECK(synthesize(alloc, plan, t, 2024) == a);
    CHECK(synthesize(alloc, plan, t, 2025) != a);
}

TEST_CASE("a unit's agents do not depend on other units") {
    const auto plan = build_conditionals(census_from(small_census_csv()));
    const auto t = tams({{0, 10}, {1, 20}, {2, 30}});
    const auto both = synthesize(allocation_of({{0, 1, 40}, {2, 3, 60}}), plan, t, 5);
    const auto only = synthesize(allocation_of({{2, 3, 60}}), plan, t, 5);
    for (std::size_t i = 0; i < only.size(); ++i) {
        auto a = both[40 + i];
        a.aid = only[i].aid;
        CHECK(a == only[i]);
    }
}

TEST_CASE("marginal and conditional frequencies match the tables") {
    const auto plan = build_conditionals(census_from(small_census_csv()));
    const std::size_t n = 60000;
    SynthesisOptions faithful;
    faithful.paper_faithful = true;
    const auto agents = synthesize(allocation_of({{0, 1, static_cast<std::int64_t>(n)}}), plan, tams({{0, 0}}), 11, faithful);
    std::size_t young = 0, male = 0, family3 = 0, high_income = 0, young_married = 0, young_higher = 0;
    std::size_t basic = 0, basic_office = 0, adult = 0, adult_married = 0;
    for (const auto& a : agents) {
        const bool is_young = a.age <= 15;
        young += is_young;
        male += a.sex == "Male";
        family3 += a.familyn == "3";
        high_income += a.income >= 1000;
        CHECK(a.age >= 0);
        CHECK(a.age <= 60);
        CHECK(a.income >= 0);
        CHECK(a.income <= 4999);
        if (is_young) {
            young_married += a.marriage == "Married";
            young_higher += a.education == "Higher";
        } else {
            ++adult;
            adult_married += a.marriage == "Married";
        }
        if (a.education == "Basic") {
            ++basic;
            basic_office += a.job == "Office";
        }
    }
    CHECK(near_proportion(young, n, 0.3));
    CHECK(near_proportion(male, n, 0.51));
    CHECK(near_proportion(family3, n, 0.75));
    CHECK(near_proportion(high_income, n, 0.6));
    CHECK(young_married == 0);
    CHECK(young_higher == 0);
    CHECK(near_proportion(adult_married, adult, 5.0 / 7.0));
    CHECK(near_proportion(basic_office, basic, 0.75));
}

TEST_CASE("ages inside a band are uniform") {
    const auto plan = build_conditionals(census_from(small_census_csv()));
    const auto agents = synthesize(allocation_of({{0, 1, 40000}}), plan, tams({{0, 0}}), 3);
    std::vector<std::size_t> hist(16, 0);
    std::size_t young = 0;
    for (const auto& a : agents)
        if (a.age <= 15) ++hist[static_cast<std::size_t>(a.age)], ++young;
    for (auto h : hist) CHECK(near_proportion(h, young, 1.0 / 16));
}

TEST_CASE("children get no job and no income unless disabled") {
    const auto plan = build_conditionals(census_from(small_census_csv()));
    const auto alloc = allocation_of({{0, 1, 3000}});
    const auto t = tams({{0, 0}});
    std::size_t young = 0;
    for (const auto& a : synthesize(alloc, plan, t, 9)) {
        if (a.age < 16) {
            ++young;
            CHECK(a.job == "None");
            CHECK(a.income == 0);
        }
    }
    CHECK(young > 0);
    SynthesisOptions faithful;
    faithful.paper_faithful = true;
    std::size_t young_income = 0;
    for (const auto& a : synthesize(alloc, plan, t, 9, faithful)) young_income += a.age < 16 && a.income > 0;
    CHECK(young_income > 0);
    // The override changes only the two affected fields.
    const auto over = synthesize(alloc, plan, t, 9);
    const auto raw = synthesize(alloc, plan, t, 9, faithful);
    for (std::size_t i = 0; i < over.size(); ++i) {
        CHECK(over[i].age == raw[i].age);
        CHECK(over[i].education == raw[i].education);
        CHECK(over[i].familyn == raw[i].familyn);
        if (over[i].age >= 16) CHECK(over[i] == raw[i]);
    }
}

TEST_CASE("per-unit census tables override the city-wide ones") {
    auto text = small_census_csv();
    text += "7,AGE,0-15,,0\n7,AGE,16-60,,1\n";
    const auto plan = build_conditionals(census_from(text));
    const auto agents = synthesize(allocation_of({{0, 7, 500}, {1, 8, 500}}), plan, tams({{0, 0}, {1, 0}}), 1);
    std::size_t young7 = 0, young8 = 0;
    for (const auto& a : agents) (a.admin_id == 7 ? young7 : young8) += a.age <= 15;
    CHECK(young7 == 0);
    CHECK(young8 > 100);
}

TEST_CASE("null model spreads every attribute uniformly") {
    const auto plan = build_conditionals(census_from(small_census_csv()));
    const std::size_t n = 40000;
    const auto agents = synthesize_null(allocation_of({{0, 1, static_cast<std::int64_t>(n)}}), plan, tams({{0, 5}}), 4);
    REQUIRE(agents.size() == n);
    std::size_t married = 0, higher = 0, old = 0;
    for (const auto& a : agents) {
        married += a.marriage == "Married";
        higher += a.education == "Higher";
        old += a.age > 30;
        CHECK(a.tam == 5);
    }
    CHECK(near_proportion(married, n, 0.5));
    CHECK(near_proportion(higher, n, 0.5));
    CHECK(near_proportion(old, n, 30.0 / 61.0));
}

TEST_CASE("agents CSV round-trips without the admin column") {
    const auto plan = build_conditionals(census_from(small_census_csv()));
    auto agents = synthesize(allocation_of({{3, 2, 50}, {8, 4, 20}}), plan, tams({{3, 123.456789}, {8, 0}}), 77);
    const auto dir = scratch_dir("agents_rt");
    write_agents_csv(dir + "/a.csv", agents);
    CHECK(slurp(dir + "/a.csv").rfind("AID,AGE,SEX,MARRIAGE,EDUCATION,JOB,INCOME,FAMILYN,PARCEL,TAM\n", 0) == 0);
    const auto back = read_agents_csv(dir + "/a.csv");
    for (auto& a : agents) a.admin_id = 0;
    CHECK(back == agents);
}

TEST_CASE("agent points land inside their parcels") {
    const auto parcels = block_grid(2);
    const auto plan = build_conditionals(census_from(small_census_csv()));
    const auto agents = synthesize(allocation_of({{0, 1, 30}, {3, 1, 30}}), plan, tams({{0, 0}, {3, 0}}), 1);
    const auto dir = scratch_dir("agents_geo");
    for (bool jitter : {false, true}) {
        write_agents_geojson(dir + "/a.geojson", agents, parcels, jitter, 1);
        const auto j = nlohmann::json::parse(slurp(dir + "/a.geojson"));
        REQUIRE(j["features"].size() == agents.size());
        std::set<std::pair<double, double>> distinct;
        for (const auto& f : j["features"]) {
            const Point pt(f["geometry"]["coordinates"][0].get<double>(), f["geometry"]["coordinates"][1].get<double>());
            const auto pid = f["properties"]["PARCEL"].get<std::int64_t>();
            CHECK(bg::within(pt, parcels[static_cast<std::size_t>(pid)].geometry));
            distinct.insert({pt.x(), pt.y()});
        }
        CHECK(distinct.size() == (jitter ? agents.size() : 2));
    }
}
