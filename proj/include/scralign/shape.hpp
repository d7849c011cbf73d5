#pragma once

#include <string>
#include <vector>
#include <cstdint>

namespace scralign {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Ordered landmark set in image pixels. Serializes to a 2P vector in
// (x1,y1,...,xP,yP) order.
struct Shape {
    std::vector<Point> points;

    int size() const { return static_cast<int>(points.size()); }

    std::vector<double> to_vector() const;
    static Shape from_vector(const std::vector<double>& v);

    Point centroid() const;
    bool finite() const;
};

// Named contiguous landmark groups (a partition of 0..P-1) plus the pair of
// point indices whose distance defines the inter-ocular normalizer.
struct LandmarkScheme {
    struct Group {
        std::string name;
        int begin = 0;
        int size = 0;
    };

    int P = 0;
    std::vector<Group> groups;
    int iod_a = 0; // outer corner, first eye
    int iod_b = 0; // outer corner, second eye

    // throws if groups do not partition 0..P-1 contiguously
    void validate() const;
};

// The canonical 49-point scheme: the standard 68-point annotation minus the
// 17 jaw points and the 2 inner-mouth corner points. Landmark order keeps
// each group contiguous: eyebrows(10), nose(9), left eye(6), right eye(6),
// mouth(18). Eye distance is measured between the outer eye corners.
const LandmarkScheme& canonical_scheme_49();

// Indices into the 68-point layout selected by the canonical 49-point scheme,
// in scheme order.
const std::vector<int>& subset_68_to_49();

double interocular_distance(const Shape& shape, const LandmarkScheme& scheme);

// 2D similarity x' = a*x - b*y + tx, y' = b*x + a*y + ty
struct Similarity {
    double a = 1.0, b = 0.0, tx = 0.0, ty = 0.0;

    Point apply(const Point& p) const {
        return {a * p.x - b * p.y + tx, b * p.x + a * p.y + ty};
    }
    Shape apply(const Shape& s) const;
    double scale() const;
};

// Least-squares similarity mapping src onto dst.
Similarity fit_similarity(const Shape& src, const Shape& dst);

// Similarity-aligned average of the given shapes, returned centered at the
// origin with unit inter-ocular distance.
Shape compute_mean_shape(const std::vector<Shape>& shapes,
                         const LandmarkScheme& scheme, int iters = 5);

} // namespace scralign
