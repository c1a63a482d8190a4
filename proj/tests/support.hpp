#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include "parcelpop/ca_engine.hpp"
#include "parcelpop/geometry.hpp"
#include "parcelpop/parcelizer.hpp"
#include "parcelpop/rng.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

using namespace parcelpop;

// Fresh scratch directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("parcelpop_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline Parcel parcel_from(std::int64_t id, Polygon poly) {
    bg::correct(poly);
    Parcel p;
    p.id = id;
    p.key = geometry_fingerprint(poly);
    p.area = bg::area(poly);
    p.perimeter = bg::perimeter(poly);
    p.geometry = std::move(poly);
    return p;
}

inline RoadSegment road(std::int64_t id, std::initializer_list<std::pair<double, double>> pts,
                        std::string cls = "residential") {
    RoadSegment s;
    s.id = id;
    s.road_class = std::move(cls);
    for (auto [x, y] : pts) s.geometry.push_back(Point(x, y));
    return s;
}

// n x n blocks of `block` metres separated by `gap` metre streets; ids in
// row-major order from the south-west corner.
inline std::vector<Parcel> block_grid(int n, double block = 200, double gap = 10) {
    std::vector<Parcel> out;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double x = c * (block + gap), y = r * (block + gap);
            out.push_back(parcel_from(r * n + c, make_rect(x, y, x + block, y + block)));
        }
    return out;
}

// CA inputs for the 100-parcel toy city: local potential falls off from a
// center cluster and a smaller satellite; a lake and a ridge are masked.
struct ToyCA {
    std::vector<Parcel> parcels;
    NeighborGraph graph;
    CAInputs inputs;
    std::vector<int> masked;
};

inline ToyCA toy_ca_city(unsigned threads = 1) {
    ToyCA t;
    t.parcels = block_grid(10, 200, 10);
    t.graph = build_neighbor_graph(t.parcels, 500, threads);
    MultiPolygon lake{make_rect(1480, 200, 1900, 640)};
    MultiPolygon ridge{make_rect(0, 1700, 420, 2100)};
    std::vector<ConstraintLayer> layers = {{ConstraintKind::Water, lake}, {ConstraintKind::SteepSlope, ridge}};
    const auto cu = constraint_union(layers);
    for (const auto& p : t.parcels) {
        const auto c = representative_point(p.geometry);
        const double d1 = std::hypot(c.x() - 1000, c.y() - 1000);
        const double d2 = std::hypot(c.x() - 1700, c.y() - 1700);
        const double z = 2.2 - d1 / 350 + 1.6 * std::exp(-d2 / 250);
        t.inputs.local_potential.push_back(1 / (1 + std::exp(-z)));
        t.inputs.suitability.push_back(constraint_mask(p.geometry, cu));
        if (t.inputs.suitability.back() == 0) t.masked.push_back(static_cast<int>(p.id));
    }
    t.inputs.parcels = &t.parcels;
    t.inputs.graph = &t.graph;
    return t;
}

// Rebinds inputs after a copy or move.
inline void rebind(ToyCA& t) {
    t.inputs.parcels = &t.parcels;
    t.inputs.graph = &t.graph;
}

// Logistic log-likelihood by direct summation, independent of the library.
inline double oracle_log_likelihood(const std::vector<double>& beta, const std::vector<std::vector<double>>& rows,
                                    const std::vector<int>& y) {
    double ll = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double z = beta[0];
        for (std::size_t k = 0; k < rows[i].size(); ++k) z += beta[k + 1] * rows[i][k];
        // log(1 + e^z) evaluated without overflow.
        const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        ll += y[i] * z - softplus;
    }
    return ll;
}

// Coarse-to-fine grid search: evaluate the 3^d lattice around the current
// point, move to the best node, halve the spacing when the center wins.
inline std::vector<double> oracle_grid_search(const std::vector<std::vector<double>>& rows, const std::vector<int>& y,
                                              std::vector<double> start, double step, double min_step) {
    const std::size_t d = start.size();
    std::vector<double> best = start;
    double best_ll = oracle_log_likelihood(best, rows, y);
    std::size_t lattice = 1;
    for (std::size_t k = 0; k < d; ++k) lattice *= 3;
    while (step > min_step) {
        std::vector<double> center = best;
        bool moved = false;
        for (std::size_t code = 0; code < lattice; ++code) {
            std::vector<double> cand = center;
            std::size_t c = code;
            for (std::size_t k = 0; k < d; ++k, c /= 3) cand[k] += (static_cast<double>(c % 3) - 1) * step;
            const double ll = oracle_log_likelihood(cand, rows, y);
            if (ll > best_ll) {
                best_ll = ll;
                best = cand;
                moved = true;
            }
        }
        if (!moved) step /= 2;
    }
    return best;
}

// Rows drawn from the reference coefficients: ln_area ~ U(4, 16),
// distance ~ U(0, 60) km, density ~ U(0, 1).
struct LogisticSample {
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
};

inline LogisticSample simulate_reference(std::size_t n, std::uint64_t seed) {
    const double b[4] = {5.359, -0.306, -0.099, 3.431};
    LogisticSample s;
    CounterRng rng(stream_key({seed, 0x6c6f67ULL}));
    for (std::size_t i = 0; i < n; ++i) {
        const double la = 4 + 12 * rng.uniform();
        const double dk = 60 * rng.uniform();
        const double de = rng.uniform();
        const double z = b[0] + b[1] * la + b[2] * dk + b[3] * de;
        s.rows.push_back({la, dk, de});
        s.y.push_back(rng.uniform() < 1 / (1 + std::exp(-z)) ? 1 : 0);
    }
    return s;
}

// Complete city-wide census in long format: two age bands, two of every
// nominal attribute, with the three cross-tabulations.
inline std::string small_census_csv() {
    return "admin_id,table,category,subcategory,value\n"
           "*,AGE,0-15,,300\n*,AGE,16-60,,700\n"
           "*,SEX,Male,,510\n*,SEX,Female,,490\n"
           "*,MARRIAGE,Single,,500\n*,MARRIAGE,Married,,500\n"
           "*,EDUCATION,Basic,,600\n*,EDUCATION,Higher,,400\n"
           "*,JOB,None,,450\n*,JOB,Office,,550\n"
           "*,INCOME,0-999,,400\n*,INCOME,1000-4999,,600\n"
           "*,FAMILYN,1,,250\n*,FAMILYN,3,,750\n"
           "*,AGE:MARRIAGE,0-15,Single,300\n*,AGE:MARRIAGE,0-15,Married,0\n"
           "*,AGE:MARRIAGE,16-60,Single,200\n*,AGE:MARRIAGE,16-60,Married,500\n"
           "*,AGE:EDUCATION,0-15,Basic,300\n*,AGE:EDUCATION,0-15,Higher,0\n"
           "*,AGE:EDUCATION,16-60,Basic,300\n*,AGE:EDUCATION,16-60,Higher,400\n"
           "*,EDUCATION:JOB,Basic,None,1\n*,EDUCATION:JOB,Basic,Office,3\n"
           "*,EDUCATION:JOB,Higher,None,1\n*,EDUCATION:JOB,Higher,Office,1\n";
}

} // namespace testsupport
