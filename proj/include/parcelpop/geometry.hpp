#pragma once

// Planar geometry model shared by every module. Coordinates are projected
// meters; nothing here knows about geographic CRSs.

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/linestring.hpp>
#include <boost/geometry/geometries/box.hpp>
#include <boost/geometry/geometries/segment.hpp>
#include <boost/geometry/index/rtree.hpp>

#include <vector>

namespace parcelpop {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

using Point = bg::model::d2::point_xy<double>;
using Polygon = bg::model::polygon<Point>;          // clockwise, closed
using MultiPolygon = bg::model::multi_polygon<Polygon>;
using Polyline = bg::model::linestring<Point>;
using Box = bg::model::box<Point>;
using Segment = bg::model::segment<Point>;

inline double x_of(const Point& p) { return p.x(); }
inline double y_of(const Point& p) { return p.y(); }

// Axis-aligned rectangle polygon, closed and correctly oriented.
Polygon make_rect(double x0, double y0, double x1, double y1);

// Union of many polygons by pairwise tree reduction.
MultiPolygon union_all(std::vector<MultiPolygon> parts);
MultiPolygon union_all(const std::vector<Polygon>& parts);

// A point guaranteed to lie in the interior of a non-empty polygon.
Point representative_point(const Polygon& poly);

double area_of(const MultiPolygon& mp);

} // namespace parcelpop
