#pragma once

#include <algorithm>
#include <cmath>

namespace tanet {

// Axis-aligned box in pixel coordinates: (x, y) is the top-left corner.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double cx() const { return x + w / 2.0; }
    double cy() const { return y + h / 2.0; }
    double area() const { return w > 0.0 && h > 0.0 ? w * h : 0.0; }

    static BoundingBox from_center(double cx, double cy, double w, double h) {
        return {cx - w / 2.0, cy - h / 2.0, w, h};
    }
};

// Intersection over union. Boxes with non-positive extent have zero overlap
// with everything, including themselves.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    if (a.area() <= 0.0 || b.area() <= 0.0) return 0.0;
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

inline double center_distance(const BoundingBox& a, const BoundingBox& b) {
    return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

// Affine map between original frame coordinates and the square resized frame
// the networks consume. Anisotropic: each axis scales independently.
struct CoordTransform {
    double sx = 1.0; // resized_x = original_x * sx
    double sy = 1.0;

    BoundingBox to_resized(const BoundingBox& b) const {
        return {b.x * sx, b.y * sy, b.w * sx, b.h * sy};
    }

    BoundingBox to_original(const BoundingBox& b) const {
        return {b.x / sx, b.y / sy, b.w / sx, b.h / sy};
    }
};

} // namespace tanet
