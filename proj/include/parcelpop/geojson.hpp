#pragma once

// Thin GeoJSON (RFC 7946) layer over nlohmann::json. Readers return raw
// per-feature records so loaders can report per-feature rejections.

#include "parcelpop/geometry.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace parcelpop::geojson {

using nlohmann::json;

struct Feature {
    json geometry;    // may be null
    json properties;  // object (empty if absent)
};

// Parse a FeatureCollection (a bare Feature is accepted as a collection of
// one). Throws InputError for a missing file or malformed JSON.
std::vector<Feature> read_features(const std::string& path);
std::vector<Feature> parse_features(const json& doc, const std::string& context);

// Geometry decoders. Each throws InputError with a short reason.
Point to_point(const json& geometry);
Polyline to_polyline(const json& coordinates);
std::vector<Polyline> to_polylines(const json& geometry);  // LineString | MultiLineString
Polygon to_polygon(const json& coordinates);
MultiPolygon to_multipolygon(const json& geometry);         // Polygon | MultiPolygon

json from_point(const Point& p);
json from_polyline(const Polyline& line);
json from_polygon(const Polygon& poly);
json from_multipolygon(const MultiPolygon& mp);

json feature(json geometry, json properties);
json collection(std::vector<json> features);

void write_file(const std::string& path, const json& doc);

} // namespace parcelpop::geojson
