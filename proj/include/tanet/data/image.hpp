#pragma once

#include <utility>

#include "tanet/core/tensor.hpp"
#include "tanet/data/geometry.hpp"

namespace tanet {

// RGB image with channel-planar double storage in [0,1], shape (3,H,W).
struct Image {
    Tensor chw; // (3, h, w)

    Image() = default;
    Image(int h, int w) : chw({3, h, w}) {}

    int height() const { return chw.empty() ? 0 : chw.dim(1); }
    int width() const { return chw.empty() ? 0 : chw.dim(2); }

    double& at(int c, int y, int x) { return chw.at(c, y, x); }
    double at(int c, int y, int x) const { return chw.at(c, y, x); }

    static Image filled(int h, int w, double r, double g, double b) {
        Image im(h, w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                im.at(0, y, x) = r;
                im.at(1, y, x) = g;
                im.at(2, y, x) = b;
            }
        return im;
    }
};

// Bilinear resample to out_h x out_w, pixel centers aligned.
Image resize_bilinear(const Image& src, int out_h, int out_w);

struct ResizedFrame {
    Image image;              // R x R
    CoordTransform transform; // original -> resized box coordinates
};

// Stretches the frame anisotropically onto an R x R square and reports the
// per-axis coordinate transform (plus inverse via CoordTransform).
ResizedFrame resize_and_normalize(const Image& frame, int R);

// ITU-R 601 luma in [0,1], shape (h, w).
Tensor luminance(const Image& im);

} // namespace tanet
