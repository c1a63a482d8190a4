#include "parcelpop/metrics.hpp"
#include "parcelpop/error.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace parcelpop {

namespace {

auto sort_key(const Agent& a) {
    return std::tie(a.parcel, a.age, a.sex, a.marriage, a.education, a.job, a.income, a.familyn, a.tam);
}

std::vector<const Agent*> sorted_view(const std::vector<Agent>& agents) {
    std::vector<const Agent*> v;
    v.reserve(agents.size());
    for (const auto& a : agents) v.push_back(&a);
    std::stable_sort(v.begin(), v.end(), [](auto* x, auto* y) { return sort_key(*x) < sort_key(*y); });
    return v;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

} // namespace

SimilarityResult similarity_index(const std::vector<Agent>& a, const std::vector<Agent>& b,
                                  const SimilarityOptions& opts) {
    if (a.size() != b.size())
        throw InputError("similarity needs equal-sized agent sets (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    SimilarityResult res;
    if (a.empty()) {
        res.index = 1.0;
        res.per_attribute.fill(1.0);
        return res;
    }
    const auto va = sorted_view(a);
    const auto vb = sorted_view(b);
    std::array<std::size_t, kAttributeCount> hits{};
    for (std::size_t i = 0; i < va.size(); ++i) {
        const Agent& x = *va[i];
        const Agent& y = *vb[i];
        const std::array<bool, kAttributeCount> m = {
            near(static_cast<double>(x.age), static_cast<double>(y.age), opts.age_tolerance),
            x.sex == y.sex,
            x.marriage == y.marriage,
            x.education == y.education,
            x.job == y.job,
            near(static_cast<double>(x.income), static_cast<double>(y.income), opts.income_tolerance),
            x.familyn == y.familyn,
            x.parcel == y.parcel,
            near(x.tam, y.tam, opts.tam_tolerance),
        };
        for (std::size_t k = 0; k < kAttributeCount; ++k) hits[k] += m[k];
    }
    const double n = static_cast<double>(va.size());
    double total = 0;
    for (std::size_t k = 0; k < kAttributeCount; ++k) {
        res.per_attribute[k] = static_cast<double>(hits[k]) / n;
        total += static_cast<double>(hits[k]);
    }
    res.index = total / (n * static_cast<double>(kAttributeCount));
    return res;
}

double area_overlap_ratio(const std::vector<Polygon>& a, const std::vector<Polygon>& b) {
    const auto ua = union_all(a);
    const double area_a = bg::area(ua);
    if (!(area_a > 0)) throw InputError("overlap ratio needs a reference set with positive area");
    const auto ub = union_all(b);
    MultiPolygon inter;
    bg::intersection(ua, ub, inter);
    return bg::area(inter) / area_a;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InputError("pearson needs vectors of equal length");
    if (x.size() < 2) throw InputError("pearson needs at least two observations");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0) || !(syy > 0)) throw InputError("pearson is undefined for a constant vector");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> subregion_distribution(const std::vector<Polygon>& parcels, const std::vector<Polygon>& regions) {
    using Entry = std::pair<Box, std::size_t>;
    std::vector<Entry> boxes;
    for (std::size_t i = 0; i < parcels.size(); ++i) {
        Box b;
        bg::envelope(parcels[i], b);
        boxes.emplace_back(b, i);
    }
    const bgi::rtree<Entry, bgi::quadratic<16>> tree(boxes.begin(), boxes.end());
    std::vector<double> out(regions.size(), 0.0);
    for (std::size_t r = 0; r < regions.size(); ++r) {
        Box rb;
        bg::envelope(regions[r], rb);
        std::vector<Entry> hits;
        tree.query(bgi::intersects(rb), std::back_inserter(hits));
        std::sort(hits.begin(), hits.end(), [](const auto& p, const auto& q) { return p.second < q.second; });
        for (const auto& h : hits) {
            MultiPolygon inter;
            bg::intersection(parcels[h.second], regions[r], inter);
            out[r] += bg::area(inter);
        }
    }
    return out;
}

} // namespace parcelpop
