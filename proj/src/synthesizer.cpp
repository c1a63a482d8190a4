#include "parcelpop/synthesizer.hpp"
#include "parcelpop/csv.hpp"
#include "parcelpop/error.hpp"
#include "parcelpop/geojson.hpp"
#include "parcelpop/parallel.hpp"
#include "parcelpop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace parcelpop {

namespace {

std::string label(Attribute a) {
    return std::string(to_string(a)) + " (attribute " + std::to_string(order_index(a)) + ")";
}

} // namespace

const AttributeSpec& AttributeSchema::spec(Attribute a) const {
    for (const auto& s : attributes)
        if (s.attribute == a) return s;
    throw InputError("schema has no entry for " + label(a));
}

void AttributeSchema::validate() const {
    if (attributes.size() != kAttributeCount) throw InputError("schema must list 9 attributes");
    std::set<int> seen;
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        const auto& s = attributes[i];
        if (!seen.insert(order_index(s.attribute)).second) throw InputError("duplicate attribute in schema");
        if (order_index(s.attribute) != static_cast<int>(i) + 1)
            throw InputError("schema attributes are out of order at " + label(s.attribute));
        if (s.source == AttributeSource::Conditional) {
            if (!s.parent) throw InputError(label(s.attribute) + " is conditional but has no parent");
            if (order_index(*s.parent) >= order_index(s.attribute))
                throw InputError("parent of " + label(s.attribute) + " does not precede it");
        }
    }
}

AttributeSchema default_schema() {
    using A = Attribute;
    using K = AttributeKind;
    using S = AttributeSource;
    return AttributeSchema{{
        {A::Age, K::Ratio, S::Marginal, std::nullopt},
        {A::Sex, K::Nominal, S::Marginal, std::nullopt},
        {A::Marriage, K::Nominal, S::Conditional, A::Age},
        {A::Education, K::Ordinal, S::Conditional, A::Age},
        {A::Job, K::Nominal, S::Conditional, A::Education},
        {A::Income, K::Ratio, S::Marginal, std::nullopt},
        {A::FamilyN, K::Ordinal, S::Marginal, std::nullopt},
        {A::Parcel, K::Nominal, S::Derived, std::nullopt},
        {A::Tam, K::Ratio, S::Derived, std::nullopt},
    }};
}

const AttributePlan& UnitPlan::at(Attribute a) const {
    auto it = attributes.find(a);
    if (it == attributes.end()) throw InputError("sampling plan has no entry for " + label(a));
    return it->second;
}

const UnitPlan& SamplingPlan::for_unit(AdminId id) const {
    if (auto it = units.find(id); it != units.end()) return it->second;
    if (auto it = units.find(kCityWide); it != units.end()) return it->second;
    throw InputError("no sampling plan for admin unit " + std::to_string(id));
}

namespace {

UnitPlan plan_unit(const UnitTables& tables, const AttributeSchema& schema, const std::string& where) {
    UnitPlan up;
    for (const auto& s : schema.attributes) {
        if (s.source == AttributeSource::Derived) continue;
        AttributePlan ap;
        ap.attribute = s.attribute;
        ap.marginal = tables.marginal(s.attribute);
        if (s.source == AttributeSource::Conditional) {
            const auto* ct = tables.crosstab(*s.parent, s.attribute);
            if (!ct)
                throw InputError(where + ": missing cross-tab " + std::string(to_string(*s.parent)) + ":" +
                                 std::string(to_string(s.attribute)));
            const auto& pm = tables.marginal(*s.parent);
            ap.parent = s.parent;
            ap.parent_categories = pm.categories;
            for (std::size_t r = 0; r < ct->rows.size(); ++r) {
                auto row = ct->rows[r];
                double sum = 0;
                for (double v : row) sum += v;
                if (!(sum > 0)) {
                    if (pm.probs[r] > 0)
                        throw InputError(where + ": conditional row '" + pm.categories[r] + "' of " +
                                         label(s.attribute) + " sums to 0");
                } else if (std::abs(sum - 1.0) > 1e-12) {
                    for (double& v : row) v /= sum;
                }
                ap.conditional.push_back(std::move(row));
            }
        }
        up.attributes.emplace(s.attribute, std::move(ap));
    }
    return up;
}

} // namespace

SamplingPlan build_conditionals(const CensusTables& census, const AttributeSchema& schema) {
    schema.validate();
    SamplingPlan plan;
    for (const auto& [id, tables] : census.units) {
        const auto where = id == kCityWide ? std::string("city-wide tables") : "admin unit " + std::to_string(id);
        plan.units.emplace(id, plan_unit(tables, schema, where));
    }
    if (plan.units.empty()) throw InputError("census holds no tables");
    return plan;
}

nlohmann::json to_json(const SamplingPlan& plan) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [id, up] : plan.units) {
        nlohmann::json unit = nlohmann::json::object();
        for (const auto& [a, ap] : up.attributes) {
            nlohmann::json j;
            j["order"] = order_index(a);
            j["categories"] = ap.marginal.categories;
            j["probabilities"] = ap.marginal.probs;
            if (ap.parent) {
                j["parent"] = std::string(to_string(*ap.parent));
                nlohmann::json rows = nlohmann::json::object();
                for (std::size_t r = 0; r < ap.parent_categories.size(); ++r)
                    rows[ap.parent_categories[r]] = ap.conditional[r];
                j["conditional"] = rows;
            }
            unit[std::string(to_string(a))] = j;
        }
        out[id == kCityWide ? std::string("*") : std::to_string(id)] = unit;
    }
    return out;
}

namespace {

// Index drawn from `probs` with one uniform; zero-mass categories are never chosen.
std::size_t draw_index(const std::vector<double>& probs, double u) {
    double acc = 0;
    std::size_t last = probs.size();
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0) continue;
        acc += probs[i];
        last = i;
        if (u < acc) return i;
    }
    if (last == probs.size()) throw InputError("cannot sample from an all-zero distribution");
    return last;
}

std::int64_t draw_in_band(const std::string& category, CounterRng& rng) {
    const auto band = parse_band(category);
    if (!band) throw InputError("category '" + category + "' is not a band");
    return rng.uniform_int(band->lo, band->hi);
}

std::size_t draw_conditional(const AttributePlan& ap, std::size_t parent_index, double u) {
    const auto& row = ap.conditional.at(parent_index);
    double sum = 0;
    for (double v : row) sum += v;
    if (!(sum > 0))
        throw InputError("missing conditional row '" + ap.parent_categories[parent_index] + "' for " +
                         label(ap.attribute));
    return draw_index(row, u);
}

struct Slot {
    AdminId admin = 0;
    std::int64_t index = 0;
    std::int64_t parcel = 0;
    double tam = 0;
};

std::vector<Slot> slots_of(const ResidentialAllocation& allocation,
                           const std::map<std::int64_t, double>& tam_by_parcel) {
    auto rows = allocation.rows;
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.admin_id != b.admin_id ? a.admin_id < b.admin_id : a.parcel_id < b.parcel_id;
    });
    std::vector<Slot> slots;
    std::map<AdminId, std::int64_t> next;
    for (const auto& r : rows) {
        if (r.population < 0) throw InputError("negative allocation for parcel " + std::to_string(r.parcel_id));
        if (r.population == 0) continue;
        auto it = tam_by_parcel.find(r.parcel_id);
        if (it == tam_by_parcel.end())
            throw InputError("no center distance for parcel " + std::to_string(r.parcel_id));
        auto& k = next[r.admin_id];
        for (std::int64_t p = 0; p < r.population; ++p) slots.push_back({r.admin_id, k++, r.parcel_id, it->second});
    }
    return slots;
}

std::uint64_t as_word(std::int64_t v) { return static_cast<std::uint64_t>(v); }

} // namespace

std::vector<Agent> synthesize(const ResidentialAllocation& allocation, const SamplingPlan& plan,
                              const std::map<std::int64_t, double>& tam_by_parcel, std::uint64_t seed,
                              const SynthesisOptions& options) {
    const auto slots = slots_of(allocation, tam_by_parcel);
    std::vector<Agent> agents(slots.size());
    parallel_for(slots.size(), options.threads, [&](std::size_t n) {
        const auto& s = slots[n];
        const auto& up = plan.for_unit(s.admin);
        CounterRng rng(stream_key({seed, as_word(s.admin), as_word(s.index)}));
        Agent& a = agents[n];
        a.aid = static_cast<std::int64_t>(n) + 1;
        a.admin_id = s.admin;

        const auto& age = up.at(Attribute::Age);
        const auto age_i = draw_index(age.marginal.probs, rng.uniform());
        a.age = draw_in_band(age.marginal.categories[age_i], rng);

        const auto& sex = up.at(Attribute::Sex);
        a.sex = sex.marginal.categories[draw_index(sex.marginal.probs, rng.uniform())];

        const auto& mar = up.at(Attribute::Marriage);
        a.marriage = mar.marginal.categories[draw_conditional(mar, age_i, rng.uniform())];

        const auto& edu = up.at(Attribute::Education);
        const auto edu_i = draw_conditional(edu, age_i, rng.uniform());
        a.education = edu.marginal.categories[edu_i];

        const auto& job = up.at(Attribute::Job);
        a.job = job.marginal.categories[draw_conditional(job, edu_i, rng.uniform())];

        const auto& inc = up.at(Attribute::Income);
        const auto inc_i = draw_index(inc.marginal.probs, rng.uniform());
        a.income = draw_in_band(inc.marginal.categories[inc_i], rng);

        const auto& fam = up.at(Attribute::FamilyN);
        a.familyn = fam.marginal.categories[draw_index(fam.marginal.probs, rng.uniform())];

        if (!options.paper_faithful && a.age < options.working_age) {
            a.job = options.no_job_label;
            a.income = 0;
        }
        a.parcel = s.parcel;
        a.tam = s.tam;
    });
    return agents;
}

std::vector<Agent> synthesize_null(const ResidentialAllocation& allocation, const SamplingPlan& plan,
                                   const std::map<std::int64_t, double>& tam_by_parcel, std::uint64_t seed) {
    const auto slots = slots_of(allocation, tam_by_parcel);
    constexpr std::uint64_t kNullStream = 0x6e756c6cULL;
    std::vector<Agent> agents(slots.size());
    for (std::size_t n = 0; n < slots.size(); ++n) {
        const auto& s = slots[n];
        const auto& up = plan.for_unit(s.admin);
        CounterRng rng(stream_key({seed, kNullStream, as_word(s.admin), as_word(s.index)}));
        auto pick = [&](Attribute at) -> const std::string& {
            const auto& cats = up.at(at).marginal.categories;
            return cats[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cats.size()) - 1))];
        };
        auto span = [&](Attribute at) {
            std::int64_t lo = 0, hi = 0;
            bool first = true;
            for (const auto& c : up.at(at).marginal.categories) {
                const auto b = parse_band(c);
                if (!b) throw InputError("category '" + c + "' is not a band");
                lo = first ? b->lo : std::min(lo, b->lo);
                hi = first ? b->hi : std::max(hi, b->hi);
                first = false;
            }
            return rng.uniform_int(lo, hi);
        };
        Agent& a = agents[n];
        a.aid = static_cast<std::int64_t>(n) + 1;
        a.admin_id = s.admin;
        a.age = span(Attribute::Age);
        a.sex = pick(Attribute::Sex);
        a.marriage = pick(Attribute::Marriage);
        a.education = pick(Attribute::Education);
        a.job = pick(Attribute::Job);
        a.income = span(Attribute::Income);
        a.familyn = pick(Attribute::FamilyN);
        a.parcel = s.parcel;
        a.tam = s.tam;
    }
    return agents;
}

namespace {
const csv::Row kAgentHeader = {"AID", "AGE", "SEX", "MARRIAGE", "EDUCATION", "JOB", "INCOME", "FAMILYN", "PARCEL", "TAM"};
}

void write_agents_csv(const std::string& path, const std::vector<Agent>& agents) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    csv::write_row(out, kAgentHeader);
    for (const auto& a : agents)
        csv::write_row(out, {std::to_string(a.aid), std::to_string(a.age), a.sex, a.marriage, a.education, a.job,
                             std::to_string(a.income), a.familyn, std::to_string(a.parcel), csv::format_double(a.tam)});
    if (!out) throw InputError("write to '" + path + "' failed");
}

std::vector<Agent> read_agents_csv(const std::string& path) {
    const auto t = csv::read_file(path);
    std::vector<std::size_t> col;
    for (const auto& name : kAgentHeader) col.push_back(t.require_column(name, path));
    std::vector<Agent> out;
    for (const auto& row : t.rows) {
        if (row.size() < kAgentHeader.size()) throw InputError(path + ": short row");
        Agent a;
        a.aid = csv::parse_int(row[col[0]], path);
        a.age = csv::parse_int(row[col[1]], path);
        a.sex = row[col[2]];
        a.marriage = row[col[3]];
        a.education = row[col[4]];
        a.job = row[col[5]];
        a.income = csv::parse_int(row[col[6]], path);
        a.familyn = row[col[7]];
        a.parcel = csv::parse_int(row[col[8]], path);
        a.tam = csv::parse_double(row[col[9]], path);
        out.push_back(std::move(a));
    }
    return out;
}

namespace {

Point jittered_point(const Polygon& poly, std::uint64_t key) {
    Box env;
    bg::envelope(poly, env);
    CounterRng rng(key);
    const double w = env.max_corner().x() - env.min_corner().x();
    const double h = env.max_corner().y() - env.min_corner().y();
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const Point p(env.min_corner().x() + w * rng.uniform(), env.min_corner().y() + h * rng.uniform());
        if (bg::within(p, poly)) return p;
    }
    return representative_point(poly);
}

} // namespace

void write_agents_geojson(const std::string& path, const std::vector<Agent>& agents,
                          const std::vector<Parcel>& parcels, bool jitter, std::uint64_t seed) {
    std::map<std::int64_t, const Parcel*> by_id;
    for (const auto& p : parcels) by_id[p.id] = &p;
    std::map<std::int64_t, Point> rep;
    std::vector<nlohmann::json> feats;
    feats.reserve(agents.size());
    for (const auto& a : agents) {
        auto it = by_id.find(a.parcel);
        if (it == by_id.end()) throw InputError("agent " + std::to_string(a.aid) + " refers to unknown parcel");
        Point pt;
        if (jitter) {
            pt = jittered_point(it->second->geometry, stream_key({seed, 0x6a6974ULL, as_word(a.aid)}));
        } else {
            auto r = rep.find(a.parcel);
            if (r == rep.end()) r = rep.emplace(a.parcel, representative_point(it->second->geometry)).first;
            pt = r->second;
        }
        nlohmann::json props = {{"AID", a.aid},   {"AGE", a.age},       {"SEX", a.sex},
                                {"MARRIAGE", a.marriage}, {"EDUCATION", a.education}, {"JOB", a.job},
                                {"INCOME", a.income}, {"FAMILYN", a.familyn}, {"PARCEL", a.parcel},
                                {"TAM", a.tam}};
        feats.push_back(geojson::feature(geojson::from_point(pt), std::move(props)));
    }
    geojson::write_file(path, geojson::collection(std::move(feats)));
}

} // namespace parcelpop
