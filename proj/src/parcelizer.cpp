#include "parcelpop/parcelizer.hpp"
#include "parcelpop/error.hpp"
#include "parcelpop/geojson.hpp"
#include "parcelpop/parallel.hpp"
#include "parcelpop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace parcelpop {

using geojson::json;

namespace {

struct Vec {
    double x, y;
};

Vec sub(const Point& a, const Point& b) { return {a.x() - b.x(), a.y() - b.y()}; }
double dot(Vec a, Vec b) { return a.x * b.x + a.y * b.y; }
double cross(Vec a, Vec b) { return a.x * b.y - a.y * b.x; }
double norm(Vec a) { return std::hypot(a.x, a.y); }
Vec unit(Vec a) {
    const double n = norm(a);
    return {a.x / n, a.y / n};
}
Point offset(const Point& p, Vec d, double s) { return {p.x() + d.x * s, p.y() + d.y * s}; }

double dist(const Point& a, const Point& b) { return norm(sub(a, b)); }

struct RawSeg {
    Point p, q;
    std::string road_class;
    std::int64_t source_id;
};

// Parameter of the projection of `c` on segment pq and its distance.
std::pair<double, double> project(const Point& c, const Point& p, const Point& q) {
    const Vec d = sub(q, p);
    const double len2 = dot(d, d);
    double t = len2 > 0 ? dot(sub(c, p), d) / len2 : 0;
    t = std::clamp(t, 0.0, 1.0);
    const Point foot = offset(p, d, t);
    return {t, dist(c, foot)};
}

// Node index for `p`, reusing any existing node within `snap`.
class NodeIndex {
public:
    explicit NodeIndex(double snap) : snap_(snap) {}

    std::size_t add(const Point& p) {
        std::vector<std::pair<Point, std::size_t>> hits;
        const Box q(Point(p.x() - snap_, p.y() - snap_), Point(p.x() + snap_, p.y() + snap_));
        tree_.query(bgi::intersects(q), std::back_inserter(hits));
        std::size_t best = SIZE_MAX;
        double best_d = snap_;
        for (const auto& [pt, idx] : hits) {
            const double d = dist(pt, p);
            if (d < best_d || (d == best_d && idx < best)) {
                if (d <= snap_) {
                    best = idx;
                    best_d = d;
                }
            }
        }
        if (best != SIZE_MAX) return best;
        const std::size_t idx = nodes.size();
        nodes.push_back(p);
        tree_.insert({p, idx});
        return idx;
    }

    std::vector<Point> nodes;

private:
    double snap_;
    bgi::rtree<std::pair<Point, std::size_t>, bgi::quadratic<16>> tree_;
};

LineSet from_raw(const std::vector<RawSeg>& segs, double snap) {
    using SegBox = std::pair<Box, std::size_t>;
    std::vector<SegBox> boxes;
    boxes.reserve(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) {
        Box b;
        bg::envelope(Segment(segs[i].p, segs[i].q), b);
        b.min_corner() = Point(b.min_corner().x() - snap, b.min_corner().y() - snap);
        b.max_corner() = Point(b.max_corner().x() + snap, b.max_corner().y() + snap);
        boxes.emplace_back(b, i);
    }
    bgi::rtree<SegBox, bgi::quadratic<16>> tree(boxes.begin(), boxes.end());

    // Split parameters per segment.
    std::vector<std::vector<std::pair<double, Point>>> splits(segs.size());
    auto add_split = [&](std::size_t i, const Point& c) {
        const auto& s = segs[i];
        if (dist(c, s.p) <= snap || dist(c, s.q) <= snap) return;
        const auto [t, d] = project(c, s.p, s.q);
        (void)d;
        splits[i].emplace_back(t, c);
    };

    for (std::size_t i = 0; i < segs.size(); ++i) {
        std::vector<SegBox> cands;
        tree.query(bgi::intersects(boxes[i].first), std::back_inserter(cands));
        for (const auto& [box, j] : cands) {
            if (j <= i) continue;
            const auto& a = segs[i];
            const auto& b = segs[j];
            // Endpoints of one segment lying on the other.
            for (const Point* e : {&b.p, &b.q})
                if (project(*e, a.p, a.q).second <= snap) add_split(i, *e);
            for (const Point* e : {&a.p, &a.q})
                if (project(*e, b.p, b.q).second <= snap) add_split(j, *e);
            // Proper crossing.
            const Vec r = sub(a.q, a.p);
            const Vec s = sub(b.q, b.p);
            const double den = cross(r, s);
            if (std::abs(den) <= 1e-12 * norm(r) * norm(s)) continue;
            const Vec w = sub(b.p, a.p);
            const double t = cross(w, s) / den;
            const double u = cross(w, r) / den;
            if (t > 0 && t < 1 && u > 0 && u < 1) {
                const Point c = offset(a.p, r, t);
                add_split(i, c);
                add_split(j, c);
            }
        }
    }

    NodeIndex index(snap);
    LineSet out;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        auto& sp = splits[i];
        std::sort(sp.begin(), sp.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
        std::vector<Point> pts;
        pts.push_back(segs[i].p);
        for (const auto& [t, c] : sp) pts.push_back(c);
        pts.push_back(segs[i].q);
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            const std::size_t a = index.add(pts[k]);
            const std::size_t b = index.add(pts[k + 1]);
            if (a == b) continue;
            if (!seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
            out.edges.push_back({a, b, segs[i].road_class, segs[i].source_id});
        }
    }
    out.nodes = std::move(index.nodes);
    return out;
}

std::vector<std::vector<std::pair<std::size_t, std::size_t>>> incidence(const LineSet& lines) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> inc(lines.nodes.size());
    for (std::size_t e = 0; e < lines.edges.size(); ++e) {
        inc[lines.edges[e].a].emplace_back(e, lines.edges[e].b);
        inc[lines.edges[e].b].emplace_back(e, lines.edges[e].a);
    }
    return inc;
}

// Keep only the listed edges and drop unreferenced nodes.
LineSet subset(const LineSet& lines, const std::vector<bool>& keep) {
    LineSet out;
    std::vector<std::size_t> remap(lines.nodes.size(), SIZE_MAX);
    auto node = [&](std::size_t n) {
        if (remap[n] == SIZE_MAX) {
            remap[n] = out.nodes.size();
            out.nodes.push_back(lines.nodes[n]);
        }
        return remap[n];
    };
    for (std::size_t e = 0; e < lines.edges.size(); ++e) {
        if (!keep[e]) continue;
        auto edge = lines.edges[e];
        edge.a = node(edge.a);
        edge.b = node(edge.b);
        out.edges.push_back(std::move(edge));
    }
    return out;
}

std::vector<RawSeg> raw_of(const LineSet& lines) {
    std::vector<RawSeg> segs;
    segs.reserve(lines.edges.size());
    for (const auto& e : lines.edges)
        segs.push_back({lines.nodes[e.a], lines.nodes[e.b], e.road_class, e.source_id});
    return segs;
}

} // namespace

double LineSet::edge_length(std::size_t e) const {
    return dist(nodes[edges[e].a], nodes[edges[e].b]);
}

double LineSet::total_length() const {
    double s = 0;
    for (std::size_t e = 0; e < edges.size(); ++e) s += edge_length(e);
    return s;
}

std::vector<std::size_t> LineSet::degrees() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    for (const auto& e : edges) {
        ++d[e.a];
        ++d[e.b];
    }
    return d;
}

std::vector<Chain> chains_of(const LineSet& lines) {
    const auto deg = lines.degrees();
    const auto inc = incidence(lines);
    std::vector<bool> used(lines.edges.size(), false);
    std::vector<Chain> out;

    auto walk = [&](std::size_t start, std::size_t first_edge) {
        Chain c;
        c.nodes.push_back(start);
        std::size_t node = start;
        std::size_t edge = first_edge;
        while (true) {
            used[edge] = true;
            c.edges.push_back(edge);
            c.length += lines.edge_length(edge);
            const auto& e = lines.edges[edge];
            node = e.a == node ? e.b : e.a;
            c.nodes.push_back(node);
            if (deg[node] != 2 || node == start) break;
            const auto& pair = inc[node];
            const std::size_t next = pair[0].first == edge ? pair[1].first : pair[0].first;
            if (used[next]) break;
            edge = next;
        }
        c.closed = c.nodes.front() == c.nodes.back() && deg[c.nodes.front()] == 2;
        c.free_ends = (deg[c.nodes.front()] == 1) + (deg[c.nodes.back()] == 1);
        return c;
    };

    for (std::size_t n = 0; n < lines.nodes.size(); ++n) {
        if (deg[n] == 2 || deg[n] == 0) continue;
        for (const auto& [e, other] : inc[n])
            if (!used[e]) out.push_back(walk(n, e));
    }
    for (std::size_t e = 0; e < lines.edges.size(); ++e)
        if (!used[e]) out.push_back(walk(lines.edges[e].a, e));
    return out;
}

std::size_t component_count(const LineSet& lines) {
    std::vector<std::size_t> parent(lines.nodes.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& e : lines.edges) parent[find(e.a)] = find(e.b);
    std::set<std::size_t> roots;
    for (const auto& e : lines.edges) roots.insert(find(e.a));
    return roots.size();
}

LineSet node_polylines(const std::vector<RoadSegment>& lines, double snap) {
    std::vector<RawSeg> segs;
    for (const auto& l : lines)
        for (std::size_t k = 0; k + 1 < l.geometry.size(); ++k)
            if (dist(l.geometry[k], l.geometry[k + 1]) > snap)
                segs.push_back({l.geometry[k], l.geometry[k + 1], l.road_class, l.id});
    return from_raw(segs, snap);
}

LineSet merge_roads(const RoadNetwork& network, double snap) {
    return node_polylines(network.segments, snap);
}

LineSet trim_dangles(const LineSet& lines, double threshold, std::size_t* removed_chains) {
    if (!(threshold > 0)) throw InputError("trim threshold must be positive");
    LineSet cur = lines;
    std::size_t removed = 0;
    while (true) {
        std::vector<bool> keep(cur.edges.size(), true);
        std::size_t pass = 0;
        for (const auto& c : chains_of(cur)) {
            if (c.free_ends == 0 || c.length >= threshold) continue;
            for (auto e : c.edges) keep[e] = false;
            ++pass;
        }
        if (pass == 0) break;
        removed += pass;
        cur = subset(cur, keep);
    }
    if (removed_chains) *removed_chains = removed;
    return cur;
}

LineSet extend_segments(const LineSet& lines, double extension, double snap) {
    if (!(extension >= 0)) throw InputError("extension must be >= 0");
    if (extension == 0) return lines;
    const auto deg = lines.degrees();
    const auto inc = incidence(lines);
    auto segs = raw_of(lines);
    for (std::size_t n = 0; n < lines.nodes.size(); ++n) {
        if (deg[n] != 1) continue;
        const auto [e, other] = inc[n][0];
        const Point& end = lines.nodes[n];
        const Vec d = unit(sub(end, lines.nodes[other]));
        segs.push_back({end, offset(end, d, extension), lines.edges[e].road_class,
                        lines.edges[e].source_id});
    }
    return from_raw(segs, snap);
}

// ---------------------------------------------------------------- buffers

namespace {

Polygon ring_polygon(const std::vector<Point>& pts) {
    Polygon p;
    for (const auto& q : pts) bg::append(p.outer(), q);
    bg::append(p.outer(), pts.front());
    bg::correct(p);
    return p;
}

// A straight run of collinear same-class edges, buffered as one rectangle.
struct Run {
    std::size_t first_node, last_node;
    double half_width;
};

} // namespace

RoadSpace buffer_roads(const LineSet& lines, const ClassWidthMap& widths, unsigned threads,
                       int circle_points) {
    RoadSpace rs;
    if (lines.empty()) return rs;
    std::vector<double> hw(lines.edges.size());
    for (std::size_t e = 0; e < lines.edges.size(); ++e) {
        const auto w = widths.lookup(lines.edges[e].road_class);
        if (!w)
            throw InputError("road class '" + lines.edges[e].road_class + "' has no buffer width");
        hw[e] = *w;
    }
    const auto inc = incidence(lines);
    auto outward = [&](std::size_t node, std::size_t other) {
        return unit(sub(lines.nodes[other], lines.nodes[node]));
    };

    // Pair each edge end with an exactly continuing edge of the same width.
    std::vector<std::array<std::size_t, 2>> cont(lines.edges.size(), {SIZE_MAX, SIZE_MAX});
    for (std::size_t n = 0; n < lines.nodes.size(); ++n) {
        const auto& list = inc[n];
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto [ei, oi] = list[i];
            const int si = lines.edges[ei].a == n ? 0 : 1;
            if (cont[ei][si] != SIZE_MAX) continue;
            for (std::size_t j = i + 1; j < list.size(); ++j) {
                const auto [ej, oj] = list[j];
                const int sj = lines.edges[ej].a == n ? 0 : 1;
                if (cont[ej][sj] != SIZE_MAX || hw[ei] != hw[ej]) continue;
                const Vec di = outward(n, oi), dj = outward(n, oj);
                if (dot(di, dj) < 0 && std::abs(cross(di, dj)) < 1e-9) {
                    cont[ei][si] = ej;
                    cont[ej][sj] = ei;
                    break;
                }
            }
        }
    }

    std::vector<Run> runs;
    std::vector<std::size_t> run_of(lines.edges.size(), SIZE_MAX);
    for (std::size_t e0 = 0; e0 < lines.edges.size(); ++e0) {
        if (run_of[e0] != SIZE_MAX) continue;
        // Walk to one end of the run, then collect to the other.
        std::size_t e = e0;
        std::size_t node = lines.edges[e].a;
        std::size_t guard = 0;
        while (true) {
            const int side = lines.edges[e].a == node ? 0 : 1;
            const std::size_t next = cont[e][side];
            if (next == SIZE_MAX || next == e0 || ++guard > lines.edges.size()) break;
            node = lines.edges[next].a == node ? lines.edges[next].b : lines.edges[next].a;
            e = next;
        }
        const std::size_t run_id = runs.size();
        const std::size_t start = node;
        std::size_t cur = e;
        std::size_t at = start;
        while (cur != SIZE_MAX && run_of[cur] == SIZE_MAX) {
            run_of[cur] = run_id;
            at = lines.edges[cur].a == at ? lines.edges[cur].b : lines.edges[cur].a;
            const int side = lines.edges[cur].a == at ? 0 : 1;
            cur = cont[cur][side];
        }
        runs.push_back({start, at, hw[e]});
    }

    std::vector<Polygon> parts(runs.size());
    parallel_for(runs.size(), threads, [&](std::size_t r) {
        const Point& p = lines.nodes[runs[r].first_node];
        const Point& q = lines.nodes[runs[r].last_node];
        const Vec d = unit(sub(q, p));
        const Vec n{-d.y, d.x};
        const double w = runs[r].half_width;
        parts[r] = ring_polygon({offset(p, n, w), offset(q, n, w), offset(q, n, -w), offset(p, n, -w)});
    });

    // Round joins: fill angular gaps wider than a half-turn at nodes where
    // two or more runs meet.
    std::vector<std::vector<Polygon>> joins(lines.nodes.size());
    parallel_for(lines.nodes.size(), threads, [&](std::size_t n) {
        if (inc[n].size() < 2) return;
        struct Arm {
            double angle;
            Vec dir;
            double w;
        };
        std::vector<Arm> arms;
        for (const auto& [e, other] : inc[n]) {
            const auto& run = runs[run_of[e]];
            // A run passing straight through leaves no gap above a half-turn.
            if (run.first_node != n && run.last_node != n) return;
            const std::size_t far = run.first_node == n ? run.last_node : run.first_node;
            const Vec d = outward(n, far);
            arms.push_back({std::atan2(d.y, d.x), d, run.half_width});
        }
        std::sort(arms.begin(), arms.end(), [](const Arm& a, const Arm& b) { return a.angle < b.angle; });
        const Point& c = lines.nodes[n];
        const double two_pi = 2 * std::numbers::pi;
        const double step = two_pi / circle_points;
        for (std::size_t i = 0; i < arms.size(); ++i) {
            const Arm& a = arms[i];
            const Arm& b = arms[(i + 1) % arms.size()];
            double gap = b.angle - a.angle;
            if (i + 1 == arms.size()) gap += two_pi;
            if (gap <= std::numbers::pi + 1e-9) continue;
            const double w = std::max(a.w, b.w);
            // Arc from the left normal of `a` to the right normal of `b`.
            std::vector<Point> pts{c, offset(c, Vec{-a.dir.y, a.dir.x}, w)};
            const double from = a.angle + std::numbers::pi / 2;
            const double sweep = gap - std::numbers::pi;
            const int k = std::max(1, static_cast<int>(std::ceil(sweep / step)));
            for (int s = 1; s < k; ++s) {
                const double t = from + sweep * s / k;
                pts.push_back(offset(c, Vec{std::cos(t), std::sin(t)}, w));
            }
            pts.push_back(offset(c, Vec{b.dir.y, -b.dir.x}, w));
            joins[n].push_back(ring_polygon(pts));
        }
    });
    for (auto& j : joins)
        for (auto& p : j) parts.push_back(std::move(p));
    rs.geometry = union_all(parts);
    return rs;
}

// ---------------------------------------------------------------- parcels

std::uint64_t geometry_fingerprint(const Polygon& poly) {
    Point c(0, 0);
    bg::centroid(poly, c);
    return stream_key({static_cast<std::uint64_t>(std::llround(c.x() * 1000.0)),
                       static_cast<std::uint64_t>(std::llround(c.y() * 1000.0)),
                       static_cast<std::uint64_t>(std::llround(bg::area(poly)))});
}

namespace {

Parcel make_parcel(Polygon poly) {
    Parcel p;
    bg::correct(poly);
    p.area = bg::area(poly);
    p.perimeter = bg::perimeter(poly);
    p.key = geometry_fingerprint(poly);
    p.geometry = std::move(poly);
    return p;
}

void order_and_number(std::vector<Parcel>& parcels) {
    std::vector<std::tuple<double, double, double, std::size_t>> keys;
    for (std::size_t i = 0; i < parcels.size(); ++i) {
        Box b;
        bg::envelope(parcels[i].geometry, b);
        keys.emplace_back(b.min_corner().y(), b.min_corner().x(), -parcels[i].area, i);
    }
    std::sort(keys.begin(), keys.end());
    std::vector<Parcel> sorted;
    sorted.reserve(parcels.size());
    for (const auto& k : keys) sorted.push_back(std::move(parcels[std::get<3>(k)]));
    for (std::size_t i = 0; i < sorted.size(); ++i) sorted[i].id = static_cast<std::int64_t>(i);
    parcels = std::move(sorted);
}

} // namespace

ParcelSet polygonize_complement(const Polygon& extent, const RoadSpace& road_space, double min_area) {
    std::string reason;
    if (!bg::is_valid(extent, reason)) throw InputError("invalid extent: " + reason);
    ParcelSet out;
    out.report.extent_area = bg::area(extent);
    MultiPolygon rest;
    if (road_space.geometry.empty()) {
        rest.push_back(extent);
    } else {
        bg::difference(extent, road_space.geometry, rest);
        MultiPolygon road_in;
        bg::intersection(extent, road_space.geometry, road_in);
        out.report.road_area = bg::area(road_in);
    }
    for (auto& poly : rest) {
        const double a = bg::area(poly);
        if (a < min_area) {
            ++out.report.dropped_count;
            out.report.dropped_area += a;
            continue;
        }
        out.report.parcel_area += a;
        out.parcels.push_back(make_parcel(std::move(poly)));
    }
    order_and_number(out.parcels);
    return out;
}

ParcelSet assign_admin(const ParcelSet& parcels, const std::vector<AdminUnit>& units,
                       AdminAssignMode mode, AdminAssignReport* report) {
    AdminAssignReport local;
    AdminAssignReport& rep = report ? *report : local;
    using UnitBox = std::pair<Box, std::size_t>;
    std::vector<UnitBox> boxes;
    for (std::size_t u = 0; u < units.size(); ++u) {
        Box b;
        bg::envelope(units[u].boundary, b);
        boxes.emplace_back(b, u);
    }
    bgi::rtree<UnitBox, bgi::quadratic<16>> tree(boxes.begin(), boxes.end());

    auto unit_at = [&](const Point& p) -> std::optional<std::size_t> {
        std::vector<UnitBox> hits;
        tree.query(bgi::intersects(p), std::back_inserter(hits));
        std::optional<std::size_t> best;
        for (const auto& [b, u] : hits)
            if (bg::covered_by(p, units[u].boundary) && (!best || units[u].id < units[*best].id))
                best = u;
        return best;
    };

    ParcelSet out;
    out.report = parcels.report;
    bool renumber = false;
    for (const auto& parcel : parcels.parcels) {
        const auto u = unit_at(representative_point(parcel.geometry));
        const bool inside = u && bg::within(parcel.geometry, units[*u].boundary);
        std::size_t touching = 0;
        if (!inside) {
            // Straddles a boundary or lies partly outside every unit.
            std::vector<UnitBox> hits;
            Box env;
            bg::envelope(parcel.geometry, env);
            tree.query(bgi::intersects(env), std::back_inserter(hits));
            for (const auto& [b, k] : hits) {
                MultiPolygon piece;
                bg::intersection(parcel.geometry, units[k].boundary, piece);
                touching += bg::area(piece) > 1.0;
            }
            if (touching > 1) ++rep.straddling;
        }
        if (mode == AdminAssignMode::Split && !inside && touching > 0) {
            renumber = true;
            MultiPolygon covered;
            for (const auto& unit : units) {
                MultiPolygon piece;
                bg::intersection(parcel.geometry, unit.boundary, piece);
                for (auto& poly : piece) {
                    if (bg::area(poly) < 1.0) continue;
                    Parcel p = make_parcel(poly);
                    p.admin_id = unit.id;
                    out.parcels.push_back(std::move(p));
                    ++rep.split_pieces;
                }
                MultiPolygon merged;
                bg::union_(covered, piece, merged);
                covered = std::move(merged);
            }
            MultiPolygon outside;
            bg::difference(parcel.geometry, covered, outside);
            for (auto& poly : outside) {
                if (bg::area(poly) < 1.0) continue;
                out.parcels.push_back(make_parcel(poly));
                ++rep.split_pieces;
            }
            continue;
        }
        Parcel p = parcel;
        p.admin_id = u ? std::optional<AdminId>(units[*u].id) : std::nullopt;
        out.parcels.push_back(std::move(p));
    }
    if (renumber) order_and_number(out.parcels);
    for (const auto& p : out.parcels)
        if (!p.admin_id) rep.unassigned.push_back(p.id);
    return out;
}

namespace {
std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}
} // namespace

void write_parcels(const std::string& path, const std::vector<Parcel>& parcels) {
    std::vector<json> feats;
    feats.reserve(parcels.size());
    for (const auto& p : parcels) {
        json props = {{"id", p.id},
                      {"key", hex64(p.key)},
                      {"area", p.area},
                      {"perimeter", p.perimeter},
                      {"admin_id", p.admin_id ? json(*p.admin_id) : json()},
                      {"status", p.status == LandStatus::Urban ? "Urban" : "NonUrban"},
                      {"residential", p.residential}};
        feats.push_back(geojson::feature(geojson::from_polygon(p.geometry), std::move(props)));
    }
    geojson::write_file(path, geojson::collection(std::move(feats)));
}

std::vector<Parcel> read_parcels(const std::string& path) {
    std::vector<Parcel> out;
    for (const auto& f : geojson::read_features(path)) {
        auto mp = geojson::to_multipolygon(f.geometry);
        if (mp.size() != 1) throw InputError(path + ": parcel is not a single polygon");
        Parcel p;
        p.geometry = std::move(mp.front());
        const auto& pr = f.properties;
        p.id = pr.value("id", static_cast<std::int64_t>(out.size()));
        p.area = pr.contains("area") ? pr["area"].get<double>() : bg::area(p.geometry);
        p.perimeter = pr.contains("perimeter") ? pr["perimeter"].get<double>() : bg::perimeter(p.geometry);
        p.key = pr.contains("key") ? std::stoull(pr["key"].get<std::string>(), nullptr, 16)
                                   : geometry_fingerprint(p.geometry);
        if (pr.contains("admin_id") && !pr["admin_id"].is_null()) p.admin_id = pr["admin_id"].get<AdminId>();
        p.status = pr.value("status", std::string("NonUrban")) == "Urban" ? LandStatus::Urban
                                                                          : LandStatus::NonUrban;
        p.residential = pr.value("residential", false);
        if (!(p.area > 0) || !(p.perimeter > 0)) throw InputError(path + ": parcel with zero area");
        out.push_back(std::move(p));
    }
    return out;
}

void write_lines(const std::string& path, const LineSet& lines) {
    std::vector<json> feats;
    for (const auto& e : lines.edges) {
        Polyline l{lines.nodes[e.a], lines.nodes[e.b]};
        feats.push_back(geojson::feature(geojson::from_polyline(l),
                                         {{"road_class", e.road_class}, {"source_id", e.source_id}}));
    }
    geojson::write_file(path, geojson::collection(std::move(feats)));
}

} // namespace parcelpop
