#include "tanet/data/image.hpp"

#include <algorithm>
#include <cmath>

#include "tanet/core/error.hpp"

namespace tanet {

Image resize_bilinear(const Image& src, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0)
        throw ArgumentError("resize target must be positive, got " +
                            std::to_string(out_h) + "x" + std::to_string(out_w));
    const int ih = src.height(), iw = src.width();
    Image dst(out_h, out_w);
    const double ry = static_cast<double>(ih) / out_h;
    const double rx = static_cast<double>(iw) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double sy = std::clamp((y + 0.5) * ry - 0.5, 0.0, ih - 1.0);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, ih - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double sx = std::clamp((x + 0.5) * rx - 0.5, 0.0, iw - 1.0);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, iw - 1);
            const double fx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = src.at(c, y0, x0) * (1 - fx) + src.at(c, y0, x1) * fx;
                const double bot = src.at(c, y1, x0) * (1 - fx) + src.at(c, y1, x1) * fx;
                dst.at(c, y, x) = top * (1 - fy) + bot * fy;
            }
        }
    }
    return dst;
}

ResizedFrame resize_and_normalize(const Image& frame, int R) {
    if (R <= 0) throw ArgumentError("working resolution must be positive, got " + std::to_string(R));
    ResizedFrame out;
    out.image = resize_bilinear(frame, R, R);
    out.transform.sx = static_cast<double>(R) / frame.width();
    out.transform.sy = static_cast<double>(R) / frame.height();
    return out;
}

Tensor luminance(const Image& im) {
    const int h = im.height(), w = im.width();
    Tensor y({h, w});
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            y.at(r, c) = 0.299 * im.at(0, r, c) + 0.587 * im.at(1, r, c) +
                         0.114 * im.at(2, r, c);
    return y;
}

} // namespace tanet
