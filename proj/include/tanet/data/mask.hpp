#pragma once

#include "tanet/core/tensor.hpp"
#include "tanet/data/geometry.hpp"

namespace tanet {

// Binary foreground map at the working resolution. Ones mark pixels whose
// centers fall inside source_box; degenerate means the box clipped to the
// frame covered no pixel center at all.
struct GroundTruthMask {
    Tensor mask; // (R, R), values in {0, 1}
    BoundingBox source_box;
    bool degenerate = false;
};

// Pixel (x, y) counts as inside when its center (x+0.5, y+0.5) satisfies
// bx <= cx < bx+bw and by <= cy < by+bh after clipping the box to [0,R)^2.
GroundTruthMask rasterize_mask(const BoundingBox& box_resized, int R);

} // namespace tanet
