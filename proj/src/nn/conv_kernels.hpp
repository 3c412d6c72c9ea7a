#pragma once

// Column-buffer helpers shared by the convolution nodes. Buffers are built
// in position chunks with a fixed byte budget so faithful-scale layers never
// materialize multi-hundred-MB matrices.

namespace tanet::nn::detail {

struct Geom2d {
    int in_c, h, w;     // input planes
    int kh, kw, sh, sw, ph, pw;
    int oh, ow;         // output spatial size
    long K() const { return static_cast<long>(in_c) * kh * kw; }
    long P() const { return static_cast<long>(oh) * ow; }
};

struct Geom3d {
    int in_c, d, h, w;
    int kd, kh, kw, sd, sh, sw, pd, ph, pw;
    int od, oh, ow;
    long K() const { return static_cast<long>(in_c) * kd * kh * kw; }
    long P() const { return static_cast<long>(od) * oh * ow; }
};

// Number of output positions per chunk under the byte budget.
long chunk_positions(long K);

// col is column-major (K x nc): one column per output position p0+j.
void im2col_2d(const double* x, const Geom2d& g, long p0, long nc, double* col);
void col2im_2d(const double* col, const Geom2d& g, long p0, long nc, double* gx);
void im2col_3d(const double* x, const Geom3d& g, long p0, long nc, double* col);
void col2im_3d(const double* col, const Geom3d& g, long p0, long nc, double* gx);

} // namespace tanet::nn::detail
