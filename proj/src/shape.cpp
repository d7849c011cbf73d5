#include "scralign/shape.hpp"

#include <cmath>
#include <stdexcept>

namespace scralign {

std::vector<double> Shape::to_vector() const {
    std::vector<double> v;
    v.reserve(points.size() * 2);
    for (const Point& p : points) {
        v.push_back(p.x);
        v.push_back(p.y);
    }
    return v;
}

Shape Shape::from_vector(const std::vector<double>& v) {
    if (v.size() % 2 != 0) throw std::invalid_argument("Shape::from_vector: odd length");
    Shape s;
    s.points.resize(v.size() / 2);
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        s.points[i] = {v[2 * i], v[2 * i + 1]};
    }
    return s;
}

Point Shape::centroid() const {
    Point c;
    for (const Point& p : points) {
        c.x += p.x;
        c.y += p.y;
    }
    const double n = points.empty() ? 1.0 : static_cast<double>(points.size());
    return {c.x / n, c.y / n};
}

bool Shape::finite() const {
    for (const Point& p : points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    return true;
}

void LandmarkScheme::validate() const {
    int covered = 0;
    int expected_begin = 0;
    for (const Group& g : groups) {
        if (g.begin != expected_begin || g.size <= 0)
            throw std::runtime_error("LandmarkScheme: groups must be contiguous and ordered");
        expected_begin += g.size;
        covered += g.size;
    }
    if (covered != P)
        throw std::runtime_error("LandmarkScheme: group sizes do not sum to P");
    if (iod_a < 0 || iod_a >= P || iod_b < 0 || iod_b >= P || iod_a == iod_b)
        throw std::runtime_error("LandmarkScheme: bad inter-ocular indices");
}

const std::vector<int>& subset_68_to_49() {
    // 68-point layout: 0-16 jaw, 17-26 eyebrows, 27-35 nose, 36-41 left eye,
    // 42-47 right eye, 48-59 outer mouth, 60-67 inner mouth. We drop the jaw
    // and the two inner mouth corners (60, 64).
    static const std::vector<int> idx = [] {
        std::vector<int> v;
        for (int i = 17; i <= 59; ++i) v.push_back(i);
        for (int i : {61, 62, 63, 65, 66, 67}) v.push_back(i);
        return v;
    }();
    return idx;
}

const LandmarkScheme& canonical_scheme_49() {
    static const LandmarkScheme scheme = [] {
        LandmarkScheme s;
        s.P = 49;
        s.groups = {
            {"eyebrows", 0, 10},
            {"nose", 10, 9},
            {"left_eye", 19, 6},
            {"right_eye", 25, 6},
            // five named groups; this grouping gives ~24% occupancy in the
            // neighbourhood component (see build_component2)
            {"mouth", 31, 18},
        };
        s.iod_a = 19; // outer corner of the left eye  (68-point index 36)
        s.iod_b = 28; // outer corner of the right eye (68-point index 45)
        s.validate();
        return s;
    }();
    return scheme;
}

double interocular_distance(const Shape& shape, const LandmarkScheme& scheme) {
    if (shape.size() != scheme.P)
        throw std::invalid_argument("interocular_distance: shape/scheme size mismatch");
    const Point& a = shape.points[scheme.iod_a];
    const Point& b = shape.points[scheme.iod_b];
    const double d = std::hypot(a.x - b.x, a.y - b.y);
    if (!(d > 0.0))
        throw std::runtime_error("interocular_distance: degenerate annotation (zero eye distance)");
    return d;
}

Shape Similarity::apply(const Shape& s) const {
    Shape out;
    out.points.reserve(s.points.size());
    for (const Point& p : s.points) out.points.push_back(apply(p));
    return out;
}

double Similarity::scale() const { return std::hypot(a, b); }

Similarity fit_similarity(const Shape& src, const Shape& dst) {
    if (src.size() != dst.size() || src.size() == 0)
        throw std::invalid_argument("fit_similarity: size mismatch");
    // normal equations of the 4-parameter problem; closed form
    const int n = src.size();
    double sx = 0, sy = 0, dx = 0, dy = 0;
    for (int i = 0; i < n; ++i) {
        sx += src.points[i].x;
        sy += src.points[i].y;
        dx += dst.points[i].x;
        dy += dst.points[i].y;
    }
    sx /= n; sy /= n; dx /= n; dy /= n;
    double num_a = 0, num_b = 0, den = 0;
    for (int i = 0; i < n; ++i) {
        const double ux = src.points[i].x - sx, uy = src.points[i].y - sy;
        const double vx = dst.points[i].x - dx, vy = dst.points[i].y - dy;
        num_a += ux * vx + uy * vy;
        num_b += ux * vy - uy * vx;
        den += ux * ux + uy * uy;
    }
    if (!(den > 0.0)) throw std::runtime_error("fit_similarity: degenerate source shape");
    Similarity t;
    t.a = num_a / den;
    t.b = num_b / den;
    t.tx = dx - (t.a * sx - t.b * sy);
    t.ty = dy - (t.b * sx + t.a * sy);
    return t;
}

Shape compute_mean_shape(const std::vector<Shape>& shapes,
                         const LandmarkScheme& scheme, int iters) {
    if (shapes.empty()) throw std::invalid_argument("compute_mean_shape: no shapes");

    auto normalize = [&](const Shape& s) {
        Shape out = s;
        const Point c = out.centroid();
        for (Point& p : out.points) {
            p.x -= c.x;
            p.y -= c.y;
        }
        const double iod = interocular_distance(out, scheme);
        for (Point& p : out.points) {
            p.x /= iod;
            p.y /= iod;
        }
        return out;
    };

    Shape mean = normalize(shapes.front());
    for (int it = 0; it < iters; ++it) {
        Shape accum;
        accum.points.assign(mean.points.size(), Point{});
        for (const Shape& s : shapes) {
            const Shape aligned = fit_similarity(s, mean).apply(s);
            for (int i = 0; i < mean.size(); ++i) {
                accum.points[i].x += aligned.points[i].x;
                accum.points[i].y += aligned.points[i].y;
            }
        }
        for (Point& p : accum.points) {
            p.x /= static_cast<double>(shapes.size());
            p.y /= static_cast<double>(shapes.size());
        }
        mean = normalize(accum);
    }
    return mean;
}

} // namespace scralign
