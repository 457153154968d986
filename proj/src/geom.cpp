#include "fincast/geom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "fincast/util.hpp"
#include "json.hpp"

namespace fincast {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }

int orient(const Vec2& a, const Vec2& b, const Vec2& c) {
    double v = (b.x - a.x) * (c.z - a.z) - (b.z - a.z) * (c.x - a.x);
    double eps = 1e-12 * (std::abs(b.x - a.x) + std::abs(b.z - a.z) + std::abs(c.x - a.x) + std::abs(c.z - a.z) + 1.0);
    if (v > eps) return 1;
    if (v < -eps) return -1;
    return 0;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
           std::min(a.z, b.z) - 1e-12 <= p.z && p.z <= std::max(a.z, b.z) + 1e-12;
}

// any contact between the two closed segments counts as an intersection
bool segments_touch(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    int o1 = orient(a, b, c), o2 = orient(a, b, d);
    int o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

void check_simple(const std::vector<Vec2>& v, const std::string& name) {
    size_t n = v.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % n];
        if (a.x == b.x && a.z == b.z)
            throw ValidationError("shape '" + name + "': repeated vertex at index " + std::to_string(i));
    }
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            // skip edges sharing a vertex (consecutive, incl. wrap-around)
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_touch(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
                throw ValidationError("shape '" + name + "': edges " + std::to_string(i) + " and " +
                                      std::to_string(j) + " intersect (outline must be a simple polygon)");
        }
    }
}

}  // namespace

double signed_area(const std::vector<Vec2>& poly) {
    double s = 0;
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        s += a.x * b.z - b.x * a.z;
    }
    return 0.5 * s;
}

Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
    double a = signed_area(poly);
    if (std::abs(a) < 1e-300) throw ValidationError("polygon_centroid: degenerate polygon");
    double cx = 0, cz = 0;
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        double cross = p.x * q.z - q.x * p.z;
        cx += (p.x + q.x) * cross;
        cz += (p.z + q.z) * cross;
    }
    return {cx / (6.0 * a), cz / (6.0 * a)};
}

std::vector<Vec2> clip_halfplane_z(const std::vector<Vec2>& poly, double c, bool below) {
    auto inside = [&](const Vec2& p) { return below ? p.z <= c : p.z >= c; };
    std::vector<Vec2> out;
    size_t n = poly.size();
    out.reserve(n + 4);
    for (size_t i = 0; i < n; ++i) {
        const Vec2& cur = poly[i];
        const Vec2& nxt = poly[(i + 1) % n];
        bool cin = inside(cur), nin = inside(nxt);
        if (cin) out.push_back(cur);
        if (cin != nin) {
            double t = (c - cur.z) / (nxt.z - cur.z);
            out.push_back({cur.x + t * (nxt.x - cur.x), c});
        }
    }
    return out;
}

FinShape FinShape::create(std::string name, std::vector<Vec2> verts) {
    if (name.empty()) throw ValidationError("shape name must be non-empty");
    if (verts.size() < 3)
        throw ValidationError("shape '" + name + "': need at least 3 vertices, got " + std::to_string(verts.size()));
    for (size_t i = 0; i < verts.size(); ++i)
        if (!std::isfinite(verts[i].x) || !std::isfinite(verts[i].z))
            throw ValidationError("shape '" + name + "': non-finite coordinate at vertex " + std::to_string(i));
    double a = signed_area(verts);
    if (std::abs(a) < 1e-9)
        throw ValidationError("shape '" + name + "': outline encloses no area");
    if (a < 0) std::reverse(verts.begin(), verts.end());  // normalize to ccw
    check_simple(verts, name);
    FinShape s;
    s.name = std::move(name);
    s.vertices = std::move(verts);
    return s;
}

double FinShape::area() const { return signed_area(vertices); }

void AxisFrame::validate() const {
    if (!(stroke_axis_offset >= 0) || !std::isfinite(stroke_axis_offset))
        throw ValidationError("axis frame: stroke_axis_offset must be finite and >= 0");
    if (!(pitch_axis_offset >= 0) || !std::isfinite(pitch_axis_offset))
        throw ValidationError("axis frame: pitch_axis_offset must be finite and >= 0");
}

namespace {

std::vector<Vec2> register_vertices(const FinShape& shape, const AxisFrame& frame) {
    double xmin = std::numeric_limits<double>::infinity();
    double zmin = std::numeric_limits<double>::infinity();
    for (const Vec2& v : shape.vertices) {
        xmin = std::min(xmin, v.x);
        zmin = std::min(zmin, v.z);
    }
    std::vector<Vec2> out;
    out.reserve(shape.vertices.size());
    for (const Vec2& v : shape.vertices)
        out.push_back({v.x - xmin - frame.pitch_axis_offset, v.z - zmin + frame.stroke_axis_offset});
    return out;
}

}  // namespace

FlatSkeleton segment_fin(const FinShape& shape, const AxisFrame& frame, int n_strips) {
    frame.validate();
    if (n_strips < 1) throw ValidationError("segment_fin: n_strips must be >= 1");
    std::vector<Vec2> poly = register_vertices(shape, frame);
    double total = signed_area(poly);
    double zlo = std::numeric_limits<double>::infinity();
    double zhi = -std::numeric_limits<double>::infinity();
    for (const Vec2& v : poly) {
        zlo = std::min(zlo, v.z);
        zhi = std::max(zhi, v.z);
    }
    double tol = 1e-12 * total;
    auto area_below = [&](double c) { return signed_area(clip_halfplane_z(poly, c, true)); };

    // cumulative equal-area cut heights via bisection (area_below is
    // continuous and non-decreasing for a simple polygon)
    std::vector<double> cuts(n_strips + 1);
    cuts[0] = zlo;
    cuts[n_strips] = zhi;
    for (int k = 1; k < n_strips; ++k) {
        double target = total * k / n_strips;
        double lo = zlo, hi = zhi;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            double a = area_below(mid);
            if (std::abs(a - target) <= tol) {
                lo = hi = mid;
                break;
            }
            (a < target ? lo : hi) = mid;
        }
        cuts[k] = 0.5 * (lo + hi);
    }

    FlatSkeleton skel;
    skel.coms.reserve(n_strips);
    skel.strip_areas.assign(n_strips, total / n_strips);
    skel.z_cuts = cuts;
    for (int k = 0; k < n_strips; ++k) {
        std::vector<Vec2> strip = clip_halfplane_z(poly, cuts[k + 1], true);
        strip = clip_halfplane_z(strip, cuts[k], false);
        if (strip.size() < 3 || signed_area(strip) < tol)
            throw ValidationError("segment_fin: strip " + std::to_string(k) + " degenerated; outline too thin for " +
                                  std::to_string(n_strips) + " strips");
        skel.coms.push_back(polygon_centroid(strip));
    }
    return skel;
}

SkeletonFrame rotate_skeleton(const FlatSkeleton& flat, double stroke_deg, double pitch_deg) {
    if (!std::isfinite(stroke_deg) || !std::isfinite(pitch_deg))
        throw ValidationError("rotate_skeleton: angles must be finite");
    double p = deg2rad(pitch_deg), s = deg2rad(stroke_deg);
    double cp = std::cos(p), sp = std::sin(p);
    double cs = std::cos(s), ss = std::sin(s);
    SkeletonFrame out;
    out.stroke_deg = stroke_deg;
    out.pitch_deg = pitch_deg;
    out.points.reserve(flat.coms.size());
    for (const Vec2& c : flat.coms) {
        // lift to 3D: fin plane is y = 0
        double x = c.x, y = 0.0, z = c.z;
        // pitch about the z axis
        double x1 = x * cp + y * sp;
        double y1 = -x * sp + y * cp;
        // stroke about the x axis
        double y2 = y1 * cs + z * ss;
        double z2 = -y1 * ss + z * cs;
        out.points.push_back({x1, y2, z2});
    }
    return out;
}

std::vector<double> skeleton_to_vector(const SkeletonFrame& frame) {
    std::vector<double> v;
    v.reserve(frame.points.size() * 3);
    for (const Vec3& p : frame.points) {
        v.push_back(p.x);
        v.push_back(p.y);
        v.push_back(p.z);
    }
    return v;
}

const std::vector<FinShape>& builtin_shapes() {
    static const std::vector<FinShape> shapes = [] {
        std::vector<FinShape> s;
        s.push_back(FinShape::create("rect", {{0.0, 0.0}, {10.0, 0.0}, {10.0, 20.0}, {0.0, 20.0}}));
        s.push_back(FinShape::create(
            "bio",
            {{6.8500, 0.0000},  {6.8556, 1.0000},  {6.8784, 2.0000},  {6.9226, 3.0000},  {6.9905, 4.0000},
             {7.0833, 5.0000},  {7.2017, 6.0000},  {7.3460, 7.0000},  {7.5164, 8.0000},  {7.7127, 9.0000},
             {7.9345, 10.0000}, {8.1813, 11.0000}, {8.4526, 12.0000}, {8.7475, 13.0000}, {9.0654, 14.0000},
             {9.4054, 15.0000}, {9.7664, 16.0000}, {10.1475, 17.0000}, {10.5475, 18.0000}, {10.9654, 19.0000},
             {11.4000, 20.0000}, {0.0000, 20.0000}, {0.4921, 19.0000}, {0.9349, 18.0000}, {1.3313, 17.0000},
             {1.6836, 16.0000}, {1.9945, 15.0000}, {2.2667, 14.0000}, {2.5025, 13.0000}, {2.7048, 12.0000},
             {2.8760, 11.0000}, {3.0188, 10.0000}, {3.1356, 9.0000},  {3.2292, 8.0000},  {3.3021, 7.0000},
             {3.3568, 6.0000},  {3.3961, 5.0000},  {3.4224, 4.0000},  {3.4384, 3.0000},  {3.4466, 2.0000},
             {3.4496, 1.0000},  {3.4500, 0.0000}}));
        s.push_back(FinShape::create(
            "pt4",
            {{9.3000, 0.0000},  {8.2168, 1.0000},  {7.2159, 2.0000},  {6.2950, 3.0000},  {5.4519, 4.0000},
             {4.6843, 5.0000},  {3.9897, 6.0000},  {3.3657, 7.0000},  {2.8097, 8.0000},  {2.3191, 9.0000},
             {1.8910, 10.0000}, {1.5226, 11.0000}, {1.2107, 12.0000}, {0.9522, 13.0000}, {0.7437, 14.0000},
             {0.5812, 15.0000}, {0.4610, 16.0000}, {0.3784, 17.0000}, {0.3285, 18.0000}, {0.3050, 19.0000},
             {0.3000, 20.0000}, {0.0000, 20.0000}, {0.0000, 0.0000}}));
        return s;
    }();
    return shapes;
}

const FinShape& builtin_shape(const std::string& name) {
    for (const FinShape& s : builtin_shapes())
        if (s.name == name) return s;
    throw InputError("unknown builtin shape '" + name + "' (have: rect, bio, pt4)");
}

FinShape load_shape(const std::string& path) {
    std::string text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("shape file '" + path + "': " + e.what());
    }
    if (!j.is_object() || !j.contains("name") || !j.contains("vertices"))
        throw SchemaError("shape file '" + path + "': expected object with 'name' and 'vertices'");
    if (!j["name"].is_string())
        throw SchemaError("shape file '" + path + "': 'name' must be a string");
    if (!j["vertices"].is_array())
        throw SchemaError("shape file '" + path + "': 'vertices' must be an array of [x, z] pairs");
    std::vector<Vec2> verts;
    for (const auto& item : j["vertices"]) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_number() || !item[1].is_number())
            throw SchemaError("shape file '" + path + "': each vertex must be a [x, z] number pair");
        verts.push_back({item[0].get<double>(), item[1].get<double>()});
    }
    return FinShape::create(j["name"].get<std::string>(), std::move(verts));
}

void save_shape(const FinShape& shape, const std::string& path) {
    nlohmann::json j;
    j["name"] = shape.name;
    auto verts = nlohmann::json::array();
    for (const Vec2& v : shape.vertices) verts.push_back({v.x, v.z});
    j["vertices"] = std::move(verts);
    write_text_file(path, j.dump(2) + "\n");
}

Vec2 tip_vertex(const FinShape& shape, const AxisFrame& frame) {
    std::vector<Vec2> poly = register_vertices(shape, frame);
    Vec2 best = poly.front();
    for (const Vec2& v : poly)
        if (v.z > best.z || (v.z == best.z && v.x > best.x)) best = v;
    return best;
}

}  // namespace fincast
