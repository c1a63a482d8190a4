#include "parcelpop/geojson.hpp"
#include "parcelpop/error.hpp"

#include <cmath>
#include <fstream>

namespace parcelpop::geojson {

namespace {

Point coord(const json& c) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
        throw InputError("coordinate is not a [x, y] number pair");
    const double x = c[0].get<double>();
    const double y = c[1].get<double>();
    if (!std::isfinite(x) || !std::isfinite(y)) throw InputError("non-finite coordinate");
    return {x, y};
}

json coord_json(const Point& p) { return json::array({p.x(), p.y()}); }

const std::string& type_of(const json& geometry) {
    if (!geometry.is_object() || !geometry.contains("type") || !geometry["type"].is_string())
        throw InputError("geometry has no type");
    return geometry["type"].get_ref<const std::string&>();
}

const json& coords_of(const json& geometry) {
    if (!geometry.contains("coordinates")) throw InputError("geometry has no coordinates");
    return geometry["coordinates"];
}

json ring_json(const Polygon::ring_type& ring, bool reverse) {
    json r = json::array();
    if (reverse) {
        for (auto it = ring.rbegin(); it != ring.rend(); ++it) r.push_back(coord_json(*it));
    } else {
        for (const auto& p : ring) r.push_back(coord_json(p));
    }
    return r;
}

} // namespace

std::vector<Feature> parse_features(const json& doc, const std::string& context) {
    std::vector<Feature> out;
    if (!doc.is_object() || !doc.contains("type"))
        throw InputError(context + ": not a GeoJSON object");
    const auto& type = doc["type"];
    auto push = [&](const json& f) {
        Feature feat;
        feat.geometry = f.contains("geometry") ? f["geometry"] : json();
        feat.properties =
            f.contains("properties") && f["properties"].is_object() ? f["properties"] : json::object();
        out.push_back(std::move(feat));
    };
    if (type == "FeatureCollection") {
        if (!doc.contains("features") || !doc["features"].is_array())
            throw InputError(context + ": FeatureCollection without a features array");
        for (const auto& f : doc["features"]) push(f);
    } else if (type == "Feature") {
        push(doc);
    } else {
        throw InputError(context + ": expected a FeatureCollection");
    }
    return out;
}

std::vector<Feature> read_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": invalid JSON: " + e.what());
    }
    return parse_features(doc, path);
}

Point to_point(const json& geometry) {
    if (type_of(geometry) != "Point") throw InputError("expected Point geometry");
    return coord(coords_of(geometry));
}

Polyline to_polyline(const json& coordinates) {
    if (!coordinates.is_array()) throw InputError("LineString coordinates are not an array");
    Polyline line;
    for (const auto& c : coordinates) line.push_back(coord(c));
    return line;
}

std::vector<Polyline> to_polylines(const json& geometry) {
    const auto& type = type_of(geometry);
    if (type == "LineString") return {to_polyline(coords_of(geometry))};
    if (type == "MultiLineString") {
        std::vector<Polyline> out;
        for (const auto& part : coords_of(geometry)) out.push_back(to_polyline(part));
        return out;
    }
    throw InputError("expected LineString or MultiLineString, got " + type);
}

Polygon to_polygon(const json& coordinates) {
    if (!coordinates.is_array() || coordinates.empty())
        throw InputError("Polygon coordinates are empty");
    Polygon poly;
    for (std::size_t r = 0; r < coordinates.size(); ++r) {
        Polygon::ring_type ring;
        for (const auto& c : coordinates[r]) ring.push_back(coord(c));
        if (ring.size() < 4) throw InputError("polygon ring has fewer than 4 positions");
        if (!bg::equals(ring.front(), ring.back())) throw InputError("polygon ring is not closed");
        if (r == 0)
            poly.outer() = std::move(ring);
        else
            poly.inners().push_back(std::move(ring));
    }
    bg::correct(poly);
    return poly;
}

MultiPolygon to_multipolygon(const json& geometry) {
    const auto& type = type_of(geometry);
    if (type == "Polygon") return {to_polygon(coords_of(geometry))};
    if (type == "MultiPolygon") {
        MultiPolygon mp;
        for (const auto& part : coords_of(geometry)) mp.push_back(to_polygon(part));
        return mp;
    }
    throw InputError("expected Polygon or MultiPolygon, got " + type);
}

json from_point(const Point& p) {
    return {{"type", "Point"}, {"coordinates", coord_json(p)}};
}

json from_polyline(const Polyline& line) {
    json c = json::array();
    for (const auto& p : line) c.push_back(coord_json(p));
    return {{"type", "LineString"}, {"coordinates", c}};
}

namespace {
// RFC 7946 wants counterclockwise exteriors; the internal model is clockwise.
json polygon_coords(const Polygon& poly) {
    json c = json::array();
    c.push_back(ring_json(poly.outer(), true));
    for (const auto& inner : poly.inners()) c.push_back(ring_json(inner, true));
    return c;
}
} // namespace

json from_polygon(const Polygon& poly) {
    return {{"type", "Polygon"}, {"coordinates", polygon_coords(poly)}};
}

json from_multipolygon(const MultiPolygon& mp) {
    json c = json::array();
    for (const auto& p : mp) c.push_back(polygon_coords(p));
    return {{"type", "MultiPolygon"}, {"coordinates", c}};
}

json feature(json geometry, json properties) {
    return {{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(properties)}};
}

json collection(std::vector<json> features) {
    json arr = json::array();
    for (auto& f : features) arr.push_back(std::move(f));
    return {{"type", "FeatureCollection"}, {"features", std::move(arr)}};
}

void write_file(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << doc.dump() << '\n';
}

} // namespace parcelpop::geojson
