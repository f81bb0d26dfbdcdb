#include "witforge/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace witforge::geom {

namespace {

bool nearly_same(const Vec2& a, const Vec2& b) {
    return std::abs(a.x - b.x) <= kDedupEps && std::abs(a.y - b.y) <= kDedupEps;
}

}  // namespace

Polygon2D hull_2d(std::vector<Vec2> points) {
    std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    points.erase(std::unique(points.begin(), points.end(), nearly_same), points.end());

    if (points.size() < 3) {
        throw DegenerateInput("hull_2d: fewer than 3 distinct points");
    }

    const std::size_t n = points.size();
    std::vector<Vec2> hull(2 * n);
    std::size_t k = 0;

    // lower chain
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= kDedupEps) --k;
        hull[k++] = points[i];
    }
    // upper chain
    const std::size_t lower_end = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower_end && cross(hull[k - 2], hull[k - 1], points[i]) <= kDedupEps) --k;
        hull[k++] = points[i];
    }
    hull.resize(k - 1);  // last point repeats the first

    if (hull.size() < 3) {
        throw DegenerateInput("hull_2d: all points collinear");
    }
    return Polygon2D{std::move(hull)};
}

bool is_convex(const Polygon2D& p) {
    const auto& v = p.vertices;
    if (v.size() < 3) return false;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) < -kDedupEps) return false;
    }
    return true;
}

double area(const Polygon2D& p) {
    const auto& v = p.vertices;
    if (v.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    return std::abs(twice) / 2.0;
}

namespace {

// Removes consecutive duplicates and collinear triples left behind by clipping.
std::vector<Vec2> tidy_ring(std::vector<Vec2> v) {
    std::vector<Vec2> out;
    for (const Vec2& p : v) {
        if (out.empty() || !nearly_same(out.back(), p)) out.push_back(p);
    }
    while (out.size() > 1 && nearly_same(out.front(), out.back())) out.pop_back();

    bool changed = true;
    while (changed && out.size() > 3) {
        changed = false;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::size_t n = out.size();
            const Vec2& a = out[(i + n - 1) % n];
            const Vec2& b = out[i];
            const Vec2& c = out[(i + 1) % n];
            if (std::abs(cross(a, b, c)) <= kDedupEps) {
                out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return out;
}

}  // namespace

std::optional<Polygon2D> convex_intersection(const Polygon2D& a, const Polygon2D& b) {
    if (!is_convex(a) || !is_convex(b)) {
        throw NonConvexInput("convex_intersection: input polygon is not convex CCW");
    }

    // Sutherland-Hodgman: clip a successively by each half-plane of b.
    std::vector<Vec2> subject = a.vertices;
    const auto& clip = b.vertices;
    const std::size_t m = clip.size();

    for (std::size_t e = 0; e < m && !subject.empty(); ++e) {
        const Vec2& ca = clip[e];
        const Vec2& cb = clip[(e + 1) % m];
        std::vector<Vec2> next;
        next.reserve(subject.size() + 2);
        const std::size_t n = subject.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& p = subject[i];
            const Vec2& q = subject[(i + 1) % n];
            const double dp = cross(ca, cb, p);
            const double dq = cross(ca, cb, q);
            const bool p_in = dp >= -kDedupEps;
            const bool q_in = dq >= -kDedupEps;
            if (p_in) next.push_back(p);
            if (p_in != q_in) {
                const double t = dp / (dp - dq);
                next.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
            }
        }
        subject = std::move(next);
    }

    subject = tidy_ring(std::move(subject));
    if (subject.size() < 3) return std::nullopt;
    Polygon2D out{std::move(subject)};
    if (area(out) < kDedupEps) return std::nullopt;
    return out;
}

double overlap_fraction(const Polygon2D& a, const Polygon2D& b) {
    const double denom = area(a);
    if (denom < kDedupEps) {
        throw DegenerateInput("overlap_fraction: first polygon has no area");
    }
    const auto inter = convex_intersection(a, b);
    if (!inter) return 0.0;
    return area(*inter) / denom;
}

bool point_in_polygon(const Vec2& pt, const Polygon2D& p) {
    const auto& v = p.vertices;
    const std::size_t n = v.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        if (cross(v[i], v[(i + 1) % n], pt) < -kDedupEps) return false;
    }
    return true;
}

double containment_fraction(const std::vector<std::array<double, 3>>& points, const Prism& prism) {
    if (prism.z_lo >= prism.z_hi) {
        throw DegenerateInput("containment_fraction: z_lo must be below z_hi");
    }
    if (points.empty()) return 0.0;
    std::size_t inside = 0;
    for (const auto& p : points) {
        if (p[2] < prism.z_lo - kDedupEps || p[2] > prism.z_hi + kDedupEps) continue;
        if (point_in_polygon({p[0], p[1]}, prism.base)) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(points.size());
}

Polygon2D axis_rect(double x_min, double x_max, double y_min, double y_max) {
    if (!(x_min < x_max) || !(y_min < y_max)) {
        throw DegenerateInput("axis_rect: empty rectangle");
    }
    return Polygon2D{{{x_min, y_min}, {x_max, y_min}, {x_max, y_max}, {x_min, y_max}}};
}

}  // namespace witforge::geom
