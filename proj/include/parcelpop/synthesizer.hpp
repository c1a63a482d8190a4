#pragma once

// Synthetic construction of individual agents from aggregate tables:
// marginal draws for independent attributes, row-conditional draws for the
// dependent ones, location from the allocation.

#include "parcelpop/allocator.hpp"
#include "parcelpop/geodata.hpp"
#include "parcelpop/parcelizer.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace parcelpop {

enum class AttributeKind { Nominal, Ordinal, Ratio };
enum class AttributeSource { Marginal, Conditional, Derived };

struct AttributeSpec {
    Attribute attribute;
    AttributeKind kind;
    AttributeSource source;
    std::optional<Attribute> parent;
};

struct AttributeSchema {
    std::vector<AttributeSpec> attributes;   // in order index 1..9

    const AttributeSpec& spec(Attribute a) const;
    // Throws InputError if order indices are not 1..9 or a parent does not
    // precede its child.
    void validate() const;
};

AttributeSchema default_schema();

struct AttributePlan {
    Attribute attribute = Attribute::Age;
    Distribution marginal;                          // always present
    std::optional<Attribute> parent;
    std::vector<std::string> parent_categories;     // conditional rows
    std::vector<std::vector<double>> conditional;   // P(child | parent row)
};

struct UnitPlan {
    std::map<Attribute, AttributePlan> attributes;

    const AttributePlan& at(Attribute a) const;
};

struct SamplingPlan {
    std::map<AdminId, UnitPlan> units;   // kCityWide holds the shared plan

    const UnitPlan& for_unit(AdminId id) const;
};

// Throws InputError when a conditional row sums to zero for a parent
// category that carries marginal mass.
SamplingPlan build_conditionals(const CensusTables& census,
                                const AttributeSchema& schema = default_schema());

nlohmann::json to_json(const SamplingPlan& plan);

struct Agent {
    std::int64_t aid = 0;
    AdminId admin_id = 0;
    std::int64_t age = 0;
    std::string sex;
    std::string marriage;
    std::string education;
    std::string job;
    std::int64_t income = 0;
    std::string familyn;
    std::int64_t parcel = 0;
    double tam = 0;   // m

    bool operator==(const Agent&) const = default;
};

struct SynthesisOptions {
    std::int64_t working_age = 16;     // younger agents get no job and no income
    bool paper_faithful = false;       // disables the working-age override
    std::string no_job_label = "None";
    unsigned threads = 1;
};

// Exactly row.population agents per allocation row. Agent streams are keyed
// by (seed, admin_id, index within the unit); AIDs run from 1 in
// (admin_id, index) order. `tam_by_parcel` supplies each parcel's center
// distance.
std::vector<Agent> synthesize(const ResidentialAllocation& allocation, const SamplingPlan& plan,
                              const std::map<std::int64_t, double>& tam_by_parcel,
                              std::uint64_t seed, const SynthesisOptions& options = {});

// Null model: every attribute uniform over its categories (ratio values
// uniform over the full band range), no conditioning.
std::vector<Agent> synthesize_null(const ResidentialAllocation& allocation,
                                   const SamplingPlan& plan,
                                   const std::map<std::int64_t, double>& tam_by_parcel,
                                   std::uint64_t seed);

// CSV with columns AID,AGE,SEX,MARRIAGE,EDUCATION,JOB,INCOME,FAMILYN,PARCEL,TAM.
void write_agents_csv(const std::string& path, const std::vector<Agent>& agents);
std::vector<Agent> read_agents_csv(const std::string& path);

// Point features at each agent's parcel representative point, or at a
// uniform point inside the parcel when `jitter` is set.
void write_agents_geojson(const std::string& path, const std::vector<Agent>& agents,
                          const std::vector<Parcel>& parcels, bool jitter, std::uint64_t seed);

} // namespace parcelpop
