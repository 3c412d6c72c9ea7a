#include "conv_kernels.hpp"

#include <algorithm>
#include <cstring>

namespace tanet::nn::detail {

namespace {
constexpr long kColBudgetBytes = 8l << 20;
}

long chunk_positions(long K) {
    return std::max(1l, kColBudgetBytes / static_cast<long>(sizeof(double)) / std::max(1l, K));
}

void im2col_2d(const double* x, const Geom2d& g, long p0, long nc, double* col) {
    const long K = g.K();
    for (long j = 0; j < nc; ++j) {
        const long p = p0 + j;
        const int oy = static_cast<int>(p / g.ow);
        const int ox = static_cast<int>(p % g.ow);
        const int iy0 = oy * g.sh - g.ph;
        const int ix0 = ox * g.sw - g.pw;
        double* dst = col + K * j;
        for (int c = 0; c < g.in_c; ++c) {
            const double* plane = x + static_cast<long>(c) * g.h * g.w;
            for (int u = 0; u < g.kh; ++u) {
                const int iy = iy0 + u;
                if (iy < 0 || iy >= g.h) {
                    std::memset(dst, 0, sizeof(double) * static_cast<std::size_t>(g.kw));
                    dst += g.kw;
                    continue;
                }
                const double* row = plane + static_cast<long>(iy) * g.w;
                for (int v = 0; v < g.kw; ++v) {
                    const int ix = ix0 + v;
                    *dst++ = (ix >= 0 && ix < g.w) ? row[ix] : 0.0;
                }
            }
        }
    }
}

void col2im_2d(const double* col, const Geom2d& g, long p0, long nc, double* gx) {
    const long K = g.K();
    for (long j = 0; j < nc; ++j) {
        const long p = p0 + j;
        const int oy = static_cast<int>(p / g.ow);
        const int ox = static_cast<int>(p % g.ow);
        const int iy0 = oy * g.sh - g.ph;
        const int ix0 = ox * g.sw - g.pw;
        const double* src = col + K * j;
        for (int c = 0; c < g.in_c; ++c) {
            double* plane = gx + static_cast<long>(c) * g.h * g.w;
            for (int u = 0; u < g.kh; ++u) {
                const int iy = iy0 + u;
                if (iy < 0 || iy >= g.h) {
                    src += g.kw;
                    continue;
                }
                double* row = plane + static_cast<long>(iy) * g.w;
                for (int v = 0; v < g.kw; ++v) {
                    const int ix = ix0 + v;
                    if (ix >= 0 && ix < g.w) row[ix] += src[v];
                }
                src += g.kw;
            }
        }
    }
}

void im2col_3d(const double* x, const Geom3d& g, long p0, long nc, double* col) {
    const long K = g.K();
    const long plane_sz = static_cast<long>(g.h) * g.w;
    const long chan_sz = static_cast<long>(g.d) * plane_sz;
    for (long j = 0; j < nc; ++j) {
        const long p = p0 + j;
        const int od = static_cast<int>(p / (static_cast<long>(g.oh) * g.ow));
        const long rem = p % (static_cast<long>(g.oh) * g.ow);
        const int oy = static_cast<int>(rem / g.ow);
        const int ox = static_cast<int>(rem % g.ow);
        const int id0 = od * g.sd - g.pd;
        const int iy0 = oy * g.sh - g.ph;
        const int ix0 = ox * g.sw - g.pw;
        double* dst = col + K * j;
        for (int c = 0; c < g.in_c; ++c) {
            const double* chan = x + c * chan_sz;
            for (int t = 0; t < g.kd; ++t) {
                const int id = id0 + t;
                if (id < 0 || id >= g.d) {
                    std::memset(dst, 0, sizeof(double) * static_cast<std::size_t>(g.kh * g.kw));
                    dst += g.kh * g.kw;
                    continue;
                }
                const double* plane = chan + id * plane_sz;
                for (int u = 0; u < g.kh; ++u) {
                    const int iy = iy0 + u;
                    if (iy < 0 || iy >= g.h) {
                        std::memset(dst, 0, sizeof(double) * static_cast<std::size_t>(g.kw));
                        dst += g.kw;
                        continue;
                    }
                    const double* row = plane + static_cast<long>(iy) * g.w;
                    for (int v = 0; v < g.kw; ++v) {
                        const int ix = ix0 + v;
                        *dst++ = (ix >= 0 && ix < g.w) ? row[ix] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_3d(const double* col, const Geom3d& g, long p0, long nc, double* gx) {
    const long K = g.K();
    const long plane_sz = static_cast<long>(g.h) * g.w;
    const long chan_sz = static_cast<long>(g.d) * plane_sz;
    for (long j = 0; j < nc; ++j) {
        const long p = p0 + j;
        const int od = static_cast<int>(p / (static_cast<long>(g.oh) * g.ow));
        const long rem = p % (static_cast<long>(g.oh) * g.ow);
        const int oy = static_cast<int>(rem / g.ow);
        const int ox = static_cast<int>(rem % g.ow);
        const int id0 = od * g.sd - g.pd;
        const int iy0 = oy * g.sh - g.ph;
        const int ix0 = ox * g.sw - g.pw;
        const double* src = col + K * j;
        for (int c = 0; c < g.in_c; ++c) {
            double* chan = gx + c * chan_sz;
            for (int t = 0; t < g.kd; ++t) {
                const int id = id0 + t;
                if (id < 0 || id >= g.d) {
                    src += g.kh * g.kw;
                    continue;
                }
                double* plane = chan + id * plane_sz;
                for (int u = 0; u < g.kh; ++u) {
                    const int iy = iy0 + u;
                    if (iy < 0 || iy >= g.h) {
                        src += g.kw;
                        continue;
                    }
                    double* row = plane + static_cast<long>(iy) * g.w;
                    for (int v = 0; v < g.kw; ++v) {
                        const int ix = ix0 + v;
                        if (ix >= 0 && ix < g.w) row[ix] += src[v];
                    }
                    src += g.kw;
                }
            }
        }
    }
}

} // namespace tanet::nn::detail
