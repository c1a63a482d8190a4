#include "parcelpop/geometry.hpp"
#include <boost/geometry/algorithms/point_on_surface.hpp>

namespace parcelpop {

Polygon make_rect(double x0, double y0, double x1, double y1) {
    Polygon p;
    bg::append(p.outer(), Point(x0, y0));
    bg::append(p.outer(), Point(x0, y1));
    bg::append(p.outer(), Point(x1, y1));
    bg::append(p.outer(), Point(x1, y0));
    bg::append(p.outer(), Point(x0, y0));
    bg::correct(p);
    return p;
}

MultiPolygon union_all(std::vector<MultiPolygon> parts) {
    if (parts.empty()) return {};
    while (parts.size() > 1) {
        std::vector<MultiPolygon> next;
        next.reserve((parts.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
            MultiPolygon u;
            bg::union_(parts[i], parts[i + 1], u);
            next.push_back(std::move(u));
        }
        if (parts.size() % 2) next.push_back(std::move(parts.back()));
        parts = std::move(next);
    }
    return std::move(parts.front());
}

MultiPolygon union_all(const std::vector<Polygon>& parts) {
    std::vector<MultiPolygon> mps;
    mps.reserve(parts.size());
    for (const auto& p : parts) {
        if (bg::area(p) <= 0) continue;
        mps.push_back(MultiPolygon{p});
    }
    return union_all(std::move(mps));
}

Point representative_point(const Polygon& poly) {
    Point c;
    bg::centroid(poly, c);
    if (bg::within(c, poly)) return c;
    Point p;
    bg::point_on_surface(poly, p);
    return p;
}

double area_of(const MultiPolygon& mp) { return bg::area(mp); }

} // namespace parcelpop
