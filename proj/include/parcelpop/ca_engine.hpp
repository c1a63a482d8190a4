#pragma once

// Vector constrained cellular automaton over parcels. A non-urban parcel
// converts when local potential x neighborhood potential x suitability x
// stochastic disturbance exceeds a threshold, subject to an area budget.

#include "parcelpop/geodata.hpp"
#include "parcelpop/parcelizer.hpp"

#include <cstdint>
#include <vector>

namespace parcelpop {

struct NeighborGraph {
    std::vector<std::vector<std::size_t>> adjacency;   // sorted, no self loops

    std::size_t size() const { return adjacency.size(); }
};

inline constexpr double kDefaultNeighborRadius = 500;  // m

// Parcels whose boundary-to-boundary distance is <= radius are linked.
NeighborGraph build_neighbor_graph(const std::vector<Parcel>& parcels,
                                   double radius = kDefaultNeighborRadius,
                                   unsigned threads = 1);

// Fraction of neighbors currently urban; 0 for an isolated parcel.
double neighborhood_potential(std::size_t parcel, const std::vector<LandStatus>& status,
                              const NeighborGraph& graph);

inline constexpr double kDefaultConstraintOverlap = 0.5;

// Share of the parcel covered by the union of all constraint layers.
double constraint_overlap(const Polygon& parcel, const MultiPolygon& constraint_union);

// 0 when the overlap share exceeds `max_overlap`, else 1.
int constraint_mask(const Polygon& parcel, const MultiPolygon& constraint_union,
                    double max_overlap = kDefaultConstraintOverlap);
MultiPolygon constraint_union(const std::vector<ConstraintLayer>& layers);

// 1 + (-ln gamma)^beta for gamma in (0, 1).
double stochastic_factor(double gamma, double beta);

// Uniform draw for a parcel at one iteration of a seeded run.
double ca_gamma(std::uint64_t seed, std::uint64_t parcel_key, std::int64_t iteration);

struct CAParams {
    double threshold = 0.5;              // P_thd in (0, 1]
    double beta = 1.0;                   // [0, 10]
    double neighbor_radius = kDefaultNeighborRadius;
    double neighborhood_floor = 0.05;    // lower bound on P_omega
    int max_iterations = 100;
    std::uint64_t seed = 0;
    double seed_fraction = 0.1;          // share of parcels seeded urban
    double fill_fraction = 1.0;          // stop once area >= fill * budget
    bool stop_when_stalled = true;       // stop after an iteration without conversions
    bool record_snapshots = false;
    unsigned threads = 1;

    // Throws InputError on out-of-range values.
    void validate() const;
};

// Score of one parcel. Scores are not probabilities: P_r >= 1.
double transition_score(double local_potential, double neighborhood, int suitability,
                        double disturbance);

struct CAInputs {
    const std::vector<Parcel>* parcels = nullptr;
    std::vector<double> local_potential;    // per parcel, from the logistic model
    std::vector<int> suitability;           // per parcel, 0 or 1
    const NeighborGraph* graph = nullptr;
};

struct CAState {
    std::int64_t iteration = 0;
    std::vector<LandStatus> status;
    double urban_area = 0;
};

struct IterationLog {
    std::int64_t iteration = 0;
    std::size_t candidates = 0;     // scores above the threshold
    std::size_t converted = 0;
    std::size_t deferred = 0;       // candidates that did not fit the budget
    double urban_area = 0;
};

struct CAResult {
    CAState final_state;
    std::vector<IterationLog> log;
    std::vector<std::vector<LandStatus>> snapshots;  // per iteration, if recorded
    std::string stop_reason;
};

// Seed set: the top seed_fraction of suitable parcels by local potential,
// admitted in that order while they fit the budget.
CAState initial_state(const CAInputs& inputs, const CAParams& params, double budget);

// One synchronous update against the snapshot `state`.
CAState step(const CAState& state, const CAInputs& inputs, const CAParams& params,
             double budget, IterationLog* log = nullptr);

CAResult run(const CAState& initial, const CAInputs& inputs, const CAParams& params,
             double budget);

} // namespace parcelpop
