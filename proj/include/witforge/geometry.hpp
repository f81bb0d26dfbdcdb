#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

namespace witforge::geom {

// Tolerances used throughout the kernel. Inputs are meter-scale with
// millimeter-level requirements, so double precision with explicit
// epsilons is sufficient; no exact arithmetic.
inline constexpr double kDedupEps = 1e-12;    // point dedup, collinearity, area cutoff
inline constexpr double kCompareEps = 1e-9;   // geometric comparisons

class DegenerateInput : public std::runtime_error {
public:
    explicit DegenerateInput(const std::string& what) : std::runtime_error(what) {}
};

class NonConvexInput : public std::runtime_error {
public:
    explicit NonConvexInput(const std::string& what) : std::runtime_error(what) {}
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }

/// z-component of (b - a) x (c - a).
inline double cross(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// Convex polygon, vertices counter-clockwise, no three consecutive
/// collinear points. Polygons produced by hull_2d start at the
/// lexicographically smallest vertex.
struct Polygon2D {
    std::vector<Vec2> vertices;

    std::size_t size() const { return vertices.size(); }
    const Vec2& operator[](std::size_t i) const { return vertices[i]; }
};

/// Convex hull (monotone chain). CCW, starting from the lexicographically
/// smallest vertex; collinear interior points are excluded.
/// Throws DegenerateInput for <3 distinct points or an all-collinear set.
Polygon2D hull_2d(std::vector<Vec2> points);

bool is_convex(const Polygon2D& p);

/// Shoelace area (absolute value).
double area(const Polygon2D& p);

/// Clip of a against b (convex-convex clipping). Empty optional when the
/// intersection area is below kDedupEps. Throws NonConvexInput.
std::optional<Polygon2D> convex_intersection(const Polygon2D& a, const Polygon2D& b);

/// area(a ∩ b) / area(a); 0 when the polygons do not intersect.
/// Throws DegenerateInput when a has no area.
double overlap_fraction(const Polygon2D& a, const Polygon2D& b);

/// Point containment for a convex CCW polygon; boundary counts as inside.
bool point_in_polygon(const Vec2& pt, const Polygon2D& p);

struct Prism {
    Polygon2D base;
    double z_lo = 0.0;
    double z_hi = 0.0;
};

/// Fraction of points inside the prism (boundary counts as inside).
/// Throws DegenerateInput when z_lo >= z_hi. Empty input yields 0.
double containment_fraction(const std::vector<std::array<double, 3>>& points, const Prism& prism);

/// Axis-aligned rectangle as a CCW polygon starting at (x_min, y_min).
Polygon2D axis_rect(double x_min, double x_max, double y_min, double y_max);

}  // namespace witforge::geom
