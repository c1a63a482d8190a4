#pragma once

// Parcel delineation from a road network: merge and node the roads, trim
// dangling chains, extend free ends, buffer into road space and take the
// complement within the study extent.

#include "parcelpop/geodata.hpp"
#include "parcelpop/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace parcelpop {

inline constexpr double kDefaultSnap = 0.01;          // m
inline constexpr double kDefaultTrimThreshold = 200;  // m
inline constexpr double kDefaultExtension = 20;       // m
inline constexpr double kDefaultMinParcelArea = 1000; // m²

// A noded planar line graph. Edges are straight segments that meet only at
// shared nodes.
struct LineSet {
    struct Edge {
        std::size_t a = 0;
        std::size_t b = 0;
        std::string road_class;
        std::int64_t source_id = 0;
    };

    std::vector<Point> nodes;
    std::vector<Edge> edges;

    double edge_length(std::size_t e) const;
    double total_length() const;
    std::vector<std::size_t> degrees() const;
    bool empty() const { return edges.empty(); }
};

// Maximal run of edges joined through degree-2 nodes.
struct Chain {
    std::vector<std::size_t> edges;
    std::vector<std::size_t> nodes;   // nodes.size() == edges.size() + 1
    double length = 0;
    bool closed = false;              // a ring with no junction
    int free_ends = 0;                // endpoints of degree 1
};

std::vector<Chain> chains_of(const LineSet& lines);

// Number of connected components of the line graph (isolated nodes ignored).
std::size_t component_count(const LineSet& lines);

// Split raw polylines at every mutual intersection, snap nodes within `snap`
// and drop duplicate edges (first occurrence in input order wins).
LineSet node_polylines(const std::vector<RoadSegment>& lines, double snap = kDefaultSnap);

LineSet merge_roads(const RoadNetwork& network, double snap = kDefaultSnap);

// Remove chains with a free end shorter than `threshold`, repeated until no
// such chain remains.
LineSet trim_dangles(const LineSet& lines, double threshold = kDefaultTrimThreshold,
                     std::size_t* removed_chains = nullptr);

// Extend every free end along its terminal bearing and re-node.
LineSet extend_segments(const LineSet& lines, double extension = kDefaultExtension,
                        double snap = kDefaultSnap);

struct RoadSpace {
    MultiPolygon geometry;
};

inline constexpr int kCirclePoints = 32;

// Union of per-edge flat-capped buffers plus round joins at every node of
// degree >= 2. Free ends keep a flat cap.
RoadSpace buffer_roads(const LineSet& lines, const ClassWidthMap& widths,
                       unsigned threads = 1, int circle_points = kCirclePoints);

// --------------------------------------------------------------- parcels

enum class LandStatus { NonUrban, Urban };

struct Parcel {
    std::int64_t id = 0;
    // Geometry fingerprint; stable under id relabeling. Keys random streams
    // and deterministic tie-breaks.
    std::uint64_t key = 0;
    Polygon geometry;
    double area = 0;
    double perimeter = 0;
    std::optional<AdminId> admin_id;
    LandStatus status = LandStatus::NonUrban;
    bool residential = false;
};

std::uint64_t geometry_fingerprint(const Polygon& poly);

struct PolygonizeReport {
    double extent_area = 0;
    double road_area = 0;       // road space within the extent
    double parcel_area = 0;
    double dropped_area = 0;
    std::size_t dropped_count = 0;
};

struct ParcelSet {
    std::vector<Parcel> parcels;
    PolygonizeReport report;
};

// Connected components of extent minus road space with area >= min_area.
// Ids are 0..n-1 ordered by envelope (min y, then min x).
ParcelSet polygonize_complement(const Polygon& extent, const RoadSpace& road_space,
                                double min_area = kDefaultMinParcelArea);

enum class AdminAssignMode {
    RepresentativePoint,  // whole parcel goes to the unit holding its interior point
    Split,                // straddling parcels are cut along unit boundaries
};

struct AdminAssignReport {
    std::vector<std::int64_t> unassigned;   // parcel ids with no unit
    std::size_t straddling = 0;
    std::size_t split_pieces = 0;
};

ParcelSet assign_admin(const ParcelSet& parcels, const std::vector<AdminUnit>& units,
                       AdminAssignMode mode = AdminAssignMode::RepresentativePoint,
                       AdminAssignReport* report = nullptr);

// Parcel GeoJSON: properties id, key, area, perimeter, admin_id, status,
// residential.
void write_parcels(const std::string& path, const std::vector<Parcel>& parcels);
std::vector<Parcel> read_parcels(const std::string& path);

void write_lines(const std::string& path, const LineSet& lines);

} // namespace parcelpop
