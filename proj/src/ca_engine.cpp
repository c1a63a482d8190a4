#include "parcelpop/ca_engine.hpp"
#include "parcelpop/error.hpp"
#include "parcelpop/parallel.hpp"
#include "parcelpop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace parcelpop {

NeighborGraph build_neighbor_graph(const std::vector<Parcel>& parcels, double radius, unsigned threads) {
    if (!(radius > 0)) throw InputError("neighbor radius must be positive");
    using Entry = std::pair<Box, std::size_t>;
    std::vector<Entry> boxes;
    boxes.reserve(parcels.size());
    for (std::size_t i = 0; i < parcels.size(); ++i) {
        Box b;
        bg::envelope(parcels[i].geometry, b);
        boxes.emplace_back(b, i);
    }
    const bgi::rtree<Entry, bgi::quadratic<16>> tree(boxes.begin(), boxes.end());

    std::vector<std::vector<std::size_t>> upper(parcels.size());
    parallel_for(parcels.size(), threads, [&](std::size_t i) {
        Box q = boxes[i].first;
        q.min_corner() = Point(q.min_corner().x() - radius, q.min_corner().y() - radius);
        q.max_corner() = Point(q.max_corner().x() + radius, q.max_corner().y() + radius);
        std::vector<Entry> hits;
        tree.query(bgi::intersects(q), std::back_inserter(hits));
        for (const auto& [b, j] : hits) {
            if (j <= i) continue;
            if (bg::distance(parcels[i].geometry, parcels[j].geometry) <= radius) upper[i].push_back(j);
        }
    });
    NeighborGraph g;
    g.adjacency.resize(parcels.size());
    for (std::size_t i = 0; i < parcels.size(); ++i)
        for (auto j : upper[i]) {
            g.adjacency[i].push_back(j);
            g.adjacency[j].push_back(i);
        }
    for (auto& list : g.adjacency) std::sort(list.begin(), list.end());
    return g;
}

double neighborhood_potential(std::size_t parcel, const std::vector<LandStatus>& status,
                              const NeighborGraph& graph) {
    const auto& nbrs = graph.adjacency.at(parcel);
    if (nbrs.empty()) return 0.0;
    std::size_t urban = 0;
    for (auto j : nbrs) urban += status[j] == LandStatus::Urban;
    return static_cast<double>(urban) / static_cast<double>(nbrs.size());
}

MultiPolygon constraint_union(const std::vector<ConstraintLayer>& layers) {
    std::vector<MultiPolygon> parts;
    for (const auto& l : layers)
        if (!l.geometry.empty()) parts.push_back(l.geometry);
    return union_all(std::move(parts));
}

double constraint_overlap(const Polygon& parcel, const MultiPolygon& cu) {
    if (cu.empty()) return 0.0;
    MultiPolygon inter;
    bg::intersection(parcel, cu, inter);
    return bg::area(inter) / bg::area(parcel);
}

int constraint_mask(const Polygon& parcel, const MultiPolygon& cu, double max_overlap) {
    return constraint_overlap(parcel, cu) > max_overlap ? 0 : 1;
}

double stochastic_factor(double gamma, double beta) { return 1.0 + std::pow(-std::log(gamma), beta); }

double ca_gamma(std::uint64_t seed, std::uint64_t parcel_key, std::int64_t iteration) {
    CounterRng rng(stream_key({seed, parcel_key, static_cast<std::uint64_t>(iteration)}));
    return rng.uniform();
}

double transition_score(double local_potential, double neighborhood, int suitability, double disturbance) {
    return local_potential * neighborhood * static_cast<double>(suitability) * disturbance;
}

void CAParams::validate() const {
    if (!(threshold > 0 && threshold <= 1)) throw InputError("ca.threshold must lie in (0, 1]");
    if (!(beta >= 0 && beta <= 10)) throw InputError("ca.beta must lie in [0, 10]");
    if (!(neighbor_radius > 0)) throw InputError("ca.neighbor_radius must be positive");
    if (!(neighborhood_floor >= 0 && neighborhood_floor <= 1))
        throw InputError("ca.neighborhood_floor must lie in [0, 1]");
    if (max_iterations < 0) throw InputError("ca.max_iterations must be >= 0");
    if (!(seed_fraction >= 0 && seed_fraction <= 1)) throw InputError("ca.seed_fraction must lie in [0, 1]");
    if (!(fill_fraction > 0 && fill_fraction <= 1)) throw InputError("ca.fill_fraction must lie in (0, 1]");
}

namespace {

void check_inputs(const CAInputs& in) {
    if (!in.parcels || !in.graph) throw InputError("CA inputs incomplete");
    const auto n = in.parcels->size();
    if (in.local_potential.size() != n || in.suitability.size() != n || in.graph->size() != n)
        throw InputError("CA inputs differ in length");
}

} // namespace

CAState initial_state(const CAInputs& inputs, const CAParams& params, double budget) {
    check_inputs(inputs);
    const auto& parcels = *inputs.parcels;
    CAState s;
    s.status.assign(parcels.size(), LandStatus::NonUrban);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < parcels.size(); ++i)
        if (inputs.suitability[i] == 1) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (inputs.local_potential[a] != inputs.local_potential[b])
            return inputs.local_potential[a] > inputs.local_potential[b];
        return parcels[a].key < parcels[b].key;
    });
    const auto count = static_cast<std::size_t>(
        std::floor(params.seed_fraction * static_cast<double>(parcels.size())));
    for (std::size_t k = 0; k < std::min(count, order.size()); ++k) {
        const auto i = order[k];
        if (s.urban_area + parcels[i].area > budget) continue;
        s.status[i] = LandStatus::Urban;
        s.urban_area += parcels[i].area;
    }
    return s;
}

CAState step(const CAState& state, const CAInputs& inputs, const CAParams& params, double budget,
             IterationLog* log) {
    check_inputs(inputs);
    const auto& parcels = *inputs.parcels;
    const std::size_t n = parcels.size();
    std::vector<double> score(n, 0.0);
    parallel_for(n, params.threads, [&](std::size_t i) {
        if (state.status[i] == LandStatus::Urban) return;
        const double omega =
            std::max(neighborhood_potential(i, state.status, *inputs.graph), params.neighborhood_floor);
        const double pr = stochastic_factor(ca_gamma(params.seed, parcels[i].key, state.iteration), params.beta);
        score[i] = transition_score(inputs.local_potential[i], omega, inputs.suitability[i], pr);
    });

    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < n; ++i)
        if (state.status[i] == LandStatus::NonUrban && score[i] > params.threshold) cand.push_back(i);
    std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return parcels[a].key < parcels[b].key;
    });

    CAState next = state;
    next.iteration = state.iteration + 1;
    IterationLog entry;
    entry.iteration = next.iteration;
    entry.candidates = cand.size();
    for (auto i : cand) {
        if (next.urban_area + parcels[i].area > budget) {
            ++entry.deferred;
            continue;
        }
        next.status[i] = LandStatus::Urban;
        next.urban_area += parcels[i].area;
        ++entry.converted;
    }
    entry.urban_area = next.urban_area;
    if (log) *log = entry;
    return next;
}

CAResult run(const CAState& initial, const CAInputs& inputs, const CAParams& params, double budget) {
    params.validate();
    if (!(budget > 0)) throw InputError("CA area budget must be positive");
    CAResult res;
    CAState state = initial;
    if (params.record_snapshots) res.snapshots.push_back(state.status);
    res.stop_reason = "max_iterations";
    for (int it = 0; it < params.max_iterations; ++it) {
        if (state.urban_area >= params.fill_fraction * budget) {
            res.stop_reason = "budget_filled";
            break;
        }
        IterationLog entry;
        state = step(state, inputs, params, budget, &entry);
        res.log.push_back(entry);
        if (params.record_snapshots) res.snapshots.push_back(state.status);
        if (entry.converted == 0 && params.stop_when_stalled) {
            res.stop_reason = "stalled";
            break;
        }
    }
    if (res.stop_reason == "max_iterations" && state.urban_area >= params.fill_fraction * budget)
        res.stop_reason = "budget_filled";
    res.final_state = std::move(state);
    return res;
}

} // namespace parcelpop
