#include "tanet/data/mask.hpp"

#include <algorithm>
#include <string>

#include "tanet/core/error.hpp"

namespace tanet {

GroundTruthMask rasterize_mask(const BoundingBox& box_resized, int R) {
    if (R <= 0) throw ArgumentError("mask resolution must be positive, got " + std::to_string(R));
    GroundTruthMask out;
    out.source_box = box_resized;
    out.mask = Tensor({R, R});

    const double x0 = std::max(box_resized.x, 0.0);
    const double y0 = std::max(box_resized.y, 0.0);
    const double x1 = std::min(box_resized.x + box_resized.w, static_cast<double>(R));
    const double y1 = std::min(box_resized.y + box_resized.h, static_cast<double>(R));
    long ones = 0;
    if (x1 > x0 && y1 > y0) {
        // Pixel center (x+0.5, y+0.5) in [x0, x1) x [y0, y1).
        const int ix0 = std::max(0, static_cast<int>(std::ceil(x0 - 0.5)));
        const int iy0 = std::max(0, static_cast<int>(std::ceil(y0 - 0.5)));
        for (int y = iy0; y < R && y + 0.5 < y1; ++y)
            for (int x = ix0; x < R && x + 0.5 < x1; ++x) {
                out.mask.at(y, x) = 1.0;
                ++ones;
            }
    }
    out.degenerate = ones == 0;
    return out;
}

} // namespace tanet
