#pragma once

#include <array>
#include <string>
#include <vector>

namespace fincast {

struct Vec2 {
    double x = 0, z = 0;
};

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

// Flat fin outline in the fin plane. x is chordwise (flow direction), z is
// spanwise root->tip, units cm. Vertices are stored counter-clockwise; the
// factory normalizes orientation and checks the shape invariants.
struct FinShape {
    std::string name;
    std::vector<Vec2> vertices;

    static FinShape create(std::string name, std::vector<Vec2> verts);

    double area() const;  // positive (shoelace)
};

// Placement of the fin relative to the rotation axes. The stroke axis is
// parallel to x and the pitch axis parallel to z; they intersect at the
// origin. The fin root chord sits at z = +stroke_axis_offset and the leading
// edge at x = -pitch_axis_offset (offsets measured from the axes to the fin).
struct AxisFrame {
    double stroke_axis_offset = 3.175;  // cm, root chord to stroke axis
    double pitch_axis_offset = 1.25;    // cm, leading edge to pitch axis

    void validate() const;
};

// 10 equal-area strip centers of mass in the axis frame, root->tip.
struct FlatSkeleton {
    std::vector<Vec2> coms;
    std::vector<double> strip_areas;  // cm², each = total/|strips|
    std::vector<double> z_cuts;       // strip boundaries in registered z, size |strips|+1
};

// the flat skeleton rotated into 3D by one (stroke, pitch) pair
struct SkeletonFrame {
    std::vector<Vec3> points;
    double stroke_deg = 0, pitch_deg = 0;
};

// polygon primitives (exposed for tests; operate on raw vertex lists)
double signed_area(const std::vector<Vec2>& poly);
Vec2 polygon_centroid(const std::vector<Vec2>& poly);
// keep the part of the polygon with z <= c (below = true) or z >= c
std::vector<Vec2> clip_halfplane_z(const std::vector<Vec2>& poly, double c, bool below);

// Partition the fin into n_strips equal-area strips cut along constant-z
// lines, returning per-strip centers of mass expressed in the axis frame.
FlatSkeleton segment_fin(const FinShape& shape, const AxisFrame& frame, int n_strips = 10);

// Rotate the flat skeleton: pitch first about the pitch axis (z through the
// origin), then stroke about the stroke axis (x through the origin).
// Sign conventions: positive stroke raises the fin tip (+y); positive pitch
// maps +x onto -y (leading edge up for the fin ahead of the pitch axis).
SkeletonFrame rotate_skeleton(const FlatSkeleton& flat, double stroke_deg, double pitch_deg);

// fixed flattening order: point 1 (x,y,z), point 2 (x,y,z), ...
std::vector<double> skeleton_to_vector(const SkeletonFrame& frame);

// The three shipped fin outlines: an exact 10x20 cm rectangle, a tip-loaded
// rounded blade ("bio"), and a root-loaded fast-taper outline ("pt4"). The
// bio/pt4 vertex lists are synthetic stand-ins chosen so the rectangle's
// strip COMs fall between the other two shapes' COMs, strip by strip.
const std::vector<FinShape>& builtin_shapes();
const FinShape& builtin_shape(const std::string& name);  // throws InputError

// fin outline JSON: { "name": string, "vertices": [[x, z], ...] } in cm
FinShape load_shape(const std::string& path);
void save_shape(const FinShape& shape, const std::string& path);

// vertex with maximum z after axis-frame registration (ties: larger x);
// used as the reference tip for mean-tip-speed computations
Vec2 tip_vertex(const FinShape& shape, const AxisFrame& frame);

}  // namespace fincast
