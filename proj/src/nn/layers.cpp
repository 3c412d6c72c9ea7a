#include "tanet/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "tanet/core/error.hpp"
#include "conv_kernels.hpp"

namespace tanet::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using CRowMap = Eigen::Map<const RowMat>;
using ColMat = Eigen::MatrixXd;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using CVecMap = Eigen::Map<const Eigen::VectorXd>;

void he_uniform(Tensor& w, long fan_in, Rng& rng) {
    const double lim = std::sqrt(6.0 / static_cast<double>(std::max(1l, fan_in)));
    for (long i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-lim, lim);
}

void expect_rank(const Tensor& x, int rank, const char* who) {
    if (x.rank() != rank)
        throw ShapeError(std::string(who) + ": expected rank " + std::to_string(rank) +
                         " input, got " + x.shape_string());
}

void expect_channels(const Tensor& x, int c, const char* who) {
    if (x.dim(0) != c)
        throw ShapeError(std::string(who) + ": expected " + std::to_string(c) +
                         " input channels, got " + x.shape_string());
}

} // namespace

// ---------------------------------------------------------------- Sequential

Tensor Sequential::forward(const Tensor& x, Cache* cache) const {
    if (cache) cache->kids.resize(nodes_.size());
    Tensor cur = x;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        cur = nodes_[i]->forward(cur, cache ? &cache->kids[i] : nullptr);
    return cur;
}

Tensor Sequential::backward(const Tensor& gy, const Cache& cache) {
    if (cache.kids.size() != nodes_.size())
        throw ShapeError("sequential cache does not match node count");
    Tensor cur = gy;
    for (std::size_t i = nodes_.size(); i-- > 0;)
        cur = nodes_[i]->backward(cur, cache.kids[i]);
    return cur;
}

std::vector<int> Sequential::out_shape(const std::vector<int>& in) const {
    std::vector<int> cur = in;
    for (const auto& n : nodes_) cur = n->out_shape(cur);
    return cur;
}

void Sequential::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        nodes_[i]->collect_params(prefix.empty() ? names_[i] : prefix + "." + names_[i], out);
}

void Sequential::init_params(Rng& rng) {
    for (auto& n : nodes_) n->init_params(rng);
}

// -------------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_c, int out_c, int kh, int kw, int sh, int sw, int ph, int pw)
    : in_c_(in_c), out_c_(out_c), kh_(kh), kw_(kw), sh_(sh), sw_(sw), ph_(ph), pw_(pw) {
    w.value = Tensor({out_c, in_c, kh, kw});
    b.value = Tensor({out_c});
}

std::vector<int> Conv2d::out_shape(const std::vector<int>& in) const {
    return {out_c_, conv_out_dim(in[1], kh_, sh_, ph_), conv_out_dim(in[2], kw_, sw_, pw_)};
}

void Conv2d::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    out.push_back({prefix + ".w", &w});
    out.push_back({prefix + ".b", &b});
}

void Conv2d::init_params(Rng& rng) {
    he_uniform(w.value, static_cast<long>(in_c_) * kh_ * kw_, rng);
    b.value.set_zero();
}

Tensor Conv2d::forward(const Tensor& x, Cache* cache) const {
    expect_rank(x, 3, "conv2d");
    expect_channels(x, in_c_, "conv2d");
    detail::Geom2d g{in_c_, x.dim(1), x.dim(2), kh_, kw_, sh_, sw_, ph_, pw_,
                     conv_out_dim(x.dim(1), kh_, sh_, ph_),
                     conv_out_dim(x.dim(2), kw_, sw_, pw_)};
    if (g.oh <= 0 || g.ow <= 0)
        throw ShapeError("conv2d: input " + x.shape_string() + " too small for kernel");
    Tensor out({out_c_, g.oh, g.ow});
    const long K = g.K(), P = g.P();
    const long chunk = detail::chunk_positions(K);
    ColMat col(K, std::min(chunk, P));
    CRowMap W(w.value.data(), out_c_, K);
    CVecMap bv(b.value.data(), out_c_);
    RowMap O(out.data(), out_c_, P);
    for (long p0 = 0; p0 < P; p0 += chunk) {
        const long nc = std::min(chunk, P - p0);
        detail::im2col_2d(x.data(), g, p0, nc, col.data());
        O.middleCols(p0, nc) = (W * col.leftCols(nc)).colwise() + bv;
    }
    if (cache) cache->t.assign({x});
    return out;
}

Tensor Conv2d::backward(const Tensor& gy, const Cache& cache) {
    const Tensor& x = cache.t.at(0);
    detail::Geom2d g{in_c_, x.dim(1), x.dim(2), kh_, kw_, sh_, sw_, ph_, pw_,
                     conv_out_dim(x.dim(1), kh_, sh_, ph_),
                     conv_out_dim(x.dim(2), kw_, sw_, pw_)};
    check_shape(gy, {out_c_, g.oh, g.ow}, "conv2d backward");
    const long K = g.K(), P = g.P();
    Tensor gx(x.shape());
    const long chunk = detail::chunk_positions(K);
    ColMat col(K, std::min(chunk, P));
    ColMat gcol(K, std::min(chunk, P));
    CRowMap W(w.value.data(), out_c_, K);
    CRowMap GY(gy.data(), out_c_, P);
    RowMap GW(w.ensure_grad().data(), out_c_, K);
    VecMap GB(b.ensure_grad().data(), out_c_);
    for (long p0 = 0; p0 < P; p0 += chunk) {
        const long nc = std::min(chunk, P - p0);
        detail::im2col_2d(x.data(), g, p0, nc, col.data());
        GW.noalias() += GY.middleCols(p0, nc) * col.leftCols(nc).transpose();
        gcol.leftCols(nc).noalias() = W.transpose() * GY.middleCols(p0, nc);
        detail::col2im_2d(gcol.data(), g, p0, nc, gx.data());
    }
    GB += GY.rowwise().sum();
    return gx;
}

// -------------------------------------------------------------------- Conv3d

Conv3d::Conv3d(int in_c, int out_c, int kd, int kh, int kw, int sd, int sh, int sw, int pd,
               int ph, int pw)
    : in_c_(in_c), out_c_(out_c), kd_(kd), kh_(kh), kw_(kw), sd_(sd), sh_(sh), sw_(sw),
      pd_(pd), ph_(ph), pw_(pw) {
    w.value = Tensor({out_c, in_c, kd, kh, kw});
    b.value = Tensor({out_c});
}

std::vector<int> Conv3d::out_shape(const std::vector<int>& in) const {
    return {out_c_, conv_out_dim(in[1], kd_, sd_, pd_), conv_out_dim(in[2], kh_, sh_, ph_),
            conv_out_dim(in[3], kw_, sw_, pw_)};
}

void Conv3d::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    out.push_back({prefix + ".w", &w});
    out.push_back({prefix + ".b", &b});
}

void Conv3d::init_params(Rng& rng) {
    he_uniform(w.value, static_cast<long>(in_c_) * kd_ * kh_ * kw_, rng);
    b.value.set_zero();
}

Tensor Conv3d::forward(const Tensor& x, Cache* cache) const {
    expect_rank(x, 4, "conv3d");
    expect_channels(x, in_c_, "conv3d");
    detail::Geom3d g{in_c_, x.dim(1), x.dim(2), x.dim(3), kd_, kh_, kw_, sd_, sh_, sw_,
                     pd_, ph_, pw_, conv_out_dim(x.dim(1), kd_, sd_, pd_),
                     conv_out_dim(x.dim(2), kh_, sh_, ph_),
                     conv_out_dim(x.dim(3), kw_, sw_, pw_)};
    if (g.od <= 0 || g.oh <= 0 || g.ow <= 0)
        throw ShapeError("conv3d: input " + x.shape_string() + " too small for kernel");
    Tensor out({out_c_, g.od, g.oh, g.ow});
    const long K = g.K(), P = g.P();
    const long chunk = detail::chunk_positions(K);
    ColMat col(K, std::min(chunk, P));
    CRowMap W(w.value.data(), out_c_, K);
    CVecMap bv(b.value.data(), out_c_);
    RowMap O(out.data(), out_c_, P);
    for (long p0 = 0; p0 < P; p0 += chunk) {
        const long nc = std::min(chunk, P - p0);
        detail::im2col_3d(x.data(), g, p0, nc, col.data());
        O.middleCols(p0, nc) = (W * col.leftCols(nc)).colwise() + bv;
    }
    if (cache) cache->t.assign({x});
    return out;
}

Tensor Conv3d::backward(const Tensor& gy, const Cache& cache) {
    const Tensor& x = cache.t.at(0);
    detail::Geom3d g{in_c_, x.dim(1), x.dim(2), x.dim(3), kd_, kh_, kw_, sd_, sh_, sw_,
                     pd_, ph_, pw_, conv_out_dim(x.dim(1), kd_, sd_, pd_),
                     conv_out_dim(x.dim(2), kh_, sh_, ph_),
                     conv_out_dim(x.dim(3), kw_, sw_, pw_)};
    check_shape(gy, {out_c_, g.od, g.oh, g.ow}, "conv3d backward");
    const long K = g.K(), P = g.P();
    Tensor gx(x.shape());
    const long chunk = detail::chunk_positions(K);
    ColMat col(K, std::min(chunk, P));
    ColMat gcol(K, std::min(chunk, P));
    CRowMap W(w.value.data(), out_c_, K);
    CRowMap GY(gy.data(), out_c_, P);
    RowMap GW(w.ensure_grad().data(), out_c_, K);
    VecMap GB(b.ensure_grad().data(), out_c_);
    for (long p0 = 0; p0 < P; p0 += chunk) {
        const long nc = std::min(chunk, P - p0);
        detail::im2col_3d(x.data(), g, p0, nc, col.data());
        GW.noalias() += GY.middleCols(p0, nc) * col.leftCols(nc).transpose();
        gcol.leftCols(nc).noalias() = W.transpose() * GY.middleCols(p0, nc);
        detail::col2im_3d(gcol.data(), g, p0, nc, gx.data());
    }
    GB += GY.rowwise().sum();
    return gx;
}

// ----------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int in_c, int out_c, int k, int s, int p)
    : in_c_(in_c), out_c_(out_c), k_(k), s_(s), p_(p) {
    w.value = Tensor({in_c, out_c, k, k});
    b.value = Tensor({out_c});
}

std::vector<int> ConvTranspose2d::out_shape(const std::vector<int>& in) const {
    return {out_c_, (in[1] - 1) * s_ + k_ - 2 * p_, (in[2] - 1) * s_ + k_ - 2 * p_};
}

void ConvTranspose2d::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    out.push_back({prefix + ".w", &w});
    out.push_back({prefix + ".b", &b});
}

void ConvTranspose2d::init_params(Rng& rng) {
    he_uniform(w.value, static_cast<long>(in_c_) * k_ * k_, rng);
    b.value.set_zero();
}

// Implemented as the adjoint of a strided convolution: the "conv" runs from
// the (larger) output back to the input, so forward here scatters columns
// and backward gathers them.
Tensor ConvTranspose2d::forward(const Tensor& x, Cache* cache) const {
    expect_rank(x, 3, "conv_transpose2d");
    expect_channels(x, in_c_, "conv_transpose2d");
    const int oh = (x.dim(1) - 1) * s_ + k_ - 2 * p_;
    const int ow = (x.dim(2) - 1) * s_ + k_ - 2 * p_;
    if (oh <= 0 || ow <= 0)
        throw ShapeError("conv_transpose2d: input " + x.shape_string() + " too small");
    detail::Geom2d g{out_c_, oh, ow, k_, k_, s_, s_, p_, p_, x.dim(1), x.dim(2)};
    Tensor out({out_c_, oh, ow});
    const long K = g.K(), P = g.P();
    const long chunk = detail::chunk_positions(K);
    ColMat col(K, std::min(chunk, P));
    CRowMap W(w.value.data(), in_c_, K);
    CRowMap X(x.data(), in_c_, P);
    for (long p0 = 0; p0 < P; p0 += chunk) {
        const long nc = std::min(chunk, P - p0);
        col.leftCols(nc).noalias() = W.transpose() * X.middleCols(p0, nc);
        detail::col2im_2d(col.data(), g, p0, nc, out.data());
    }
    for (int c = 0; c < out_c_; ++c) {
        double* plane = out.data() + static_cast<long>(c) * oh * ow;
        const double bias = b.value[c];
        for (long i = 0; i < static_cast<long>(oh) * ow; ++i) plane[i] += bias;
    }
    if (cache) cache->t.assign({x});
    return out;
}

Tensor ConvTranspose2d::backward(const Tensor& gy, const Cache& cache) {
    const Tensor& x = cache.t.at(0);
    const int oh = (x.dim(1) - 1) * s_ + k_ - 2 * p_;
    const int ow = (x.dim(2) - 1) * s_ + k_ - 2 * p_;
    check_shape(gy, {out_c_, oh, ow}, "conv_transpose2d backward");
    detail::Geom2d g{out_c_, oh, ow, k_, k_, s_, s_, p_, p_, x.dim(1), x.dim(2)};
    const long K = g.K(), P = g.P();
    Tensor gx(x.shape());
    const long chunk = detail::chunk_positions(K);
    ColMat col(K, std::min(chunk, P));
    CRowMap W(w.value.data(), in_c_, K);
    CRowMap X(x.data(), in_c_, P);
    RowMap GX(gx.data(), in_c_, P);
    RowMap GW(w.ensure_grad().data(), in_c_, K);
    for (long p0 = 0; p0 < P; p0 += chunk) {
        const long nc = std::min(chunk, P - p0);
        detail::im2col_2d(gy.data(), g, p0, nc, col.data());
        GX.middleCols(p0, nc).noalias() = W * col.leftCols(nc);
        GW.noalias() += X.middleCols(p0, nc) * col.leftCols(nc).transpose();
    }
    Tensor& gb = b.ensure_grad();
    for (int c = 0; c < out_c_; ++c) {
        const double* plane = gy.data() + static_cast<long>(c) * oh * ow;
        double s = 0.0;
        for (long i = 0; i < static_cast<long>(oh) * ow; ++i) s += plane[i];
        gb[c] += s;
    }
    return gx;
}

// ----------------------------------------------------------------- MaxPool2d

MaxPool2d::MaxPool2d(int kh, int kw, int sh, int sw, int ph, int pw)
    : kh_(kh), kw_(kw), sh_(sh), sw_(sw), ph_(ph), pw_(pw) {}

std::vector<int> MaxPool2d::out_shape(const std::vector<int>& in) const {
    return {in[0], conv_out_dim(in[1], kh_, sh_, ph_), conv_out_dim(in[2], kw_, sw_, pw_)};
}

Tensor MaxPool2d::forward(const Tensor& x, Cache* cache) const {
    expect_rank(x, 3, "maxpool2d");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int oh = conv_out_dim(H, kh_, sh_, ph_), ow = conv_out_dim(W, kw_, sw_, pw_);
    if (oh <= 0 || ow <= 0)
        throw ShapeError("maxpool2d: input " + x.shape_string() + " too small");
    Tensor out({C, oh, ow});
    std::vector<int> arg(static_cast<std::size_t>(out.numel()), -1);
    long o = 0;
    for (int c = 0; c < C; ++c) {
        const double* plane = x.data() + static_cast<long>(c) * H * W;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox, ++o) {
                double best = -std::numeric_limits<double>::infinity();
                int best_i = -1;
                for (int u = 0; u < kh_; ++u) {
                    const int iy = oy * sh_ - ph_ + u;
                    if (iy < 0 || iy >= H) continue;
                    for (int v = 0; v < kw_; ++v) {
                        const int ix = ox * sw_ - pw_ + v;
                        if (ix < 0 || ix >= W) continue;
                        const double val = plane[iy * W + ix];
                        if (val > best) {
                            best = val;
                            best_i = static_cast<int>(static_cast<long>(c) * H * W + iy * W + ix);
                        }
                    }
                }
                out[o] = best_i >= 0 ? best : 0.0;
                arg[static_cast<std::size_t>(o)] = best_i;
            }
    }
    if (cache) cache->iv.assign({std::move(arg), x.shape()});
    return out;
}

Tensor MaxPool2d::backward(const Tensor& gy, const Cache& cache) {
    Tensor gx(cache.iv.at(1));
    const auto& arg = cache.iv.at(0);
    for (long o = 0; o < gy.numel(); ++o) {
        const int i = arg[static_cast<std::size_t>(o)];
        if (i >= 0) gx[i] += gy[o];
    }
    return gx;
}

// ----------------------------------------------------------------- MaxPool3d

MaxPool3d::MaxPool3d(int kd, int kh, int kw, int sd, int sh, int sw)
    : kd_(kd), kh_(kh), kw_(kw), sd_(sd), sh_(sh), sw_(sw) {}

std::vector<int> MaxPool3d::out_shape(const std::vector<int>& in) const {
    return {in[0], conv_out_dim(in[1], kd_, sd_, 0), conv_out_dim(in[2], kh_, sh_, 0),
            conv_out_dim(in[3], kw_, sw_, 0)};
}

Tensor MaxPool3d::forward(const Tensor& x, Cache* cache) const {
    expect_rank(x, 4, "maxpool3d");
    const int C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int od = conv_out_dim(D, kd_, sd_, 0);
    const int oh = conv_out_dim(H, kh_, sh_, 0);
    const int ow = conv_out_dim(W, kw_, sw_, 0);
    if (od <= 0 || oh <= 0 || ow <= 0)
        throw ShapeError("maxpool3d: input " + x.shape_string() + " too small");
    Tensor out({C, od, oh, ow});
    std::vector<int> arg(static_cast<std::size_t>(out.numel()), -1);
    const long plane = static_cast<long>(H) * W;
    long o = 0;
    for (int c = 0; c < C; ++c) {
        const double* chan = x.data() + static_cast<long>(c) * D * plane;
        for (int oz = 0; oz < od; ++oz)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox, ++o) {
                    double best = -std::numeric_limits<double>::infinity();
                    int best_i = -1;
                    for (int t = 0; t < kd_; ++t) {
                        const int iz = oz * sd_ + t;
                        if (iz >= D) continue;
                        for (int u = 0; u < kh_; ++u) {
                            const int iy = oy * sh_ + u;
                            if (iy >= H) continue;
                            for (int v = 0; v < kw_; ++v) {
                                const int ix = ox * sw_ + v;
                                if (ix >= W) continue;
                                const double val = chan[iz * plane + iy * W + ix];
                                if (val > best) {
                                    best = val;
                                    best_i = static_cast<int>(static_cast<long>(c) * D * plane +
                                                              iz * plane + iy * W + ix);
                                }
                            }
                        }
                    }
                    out[o] = best_i >= 0 ? best : 0.0;
                    arg[static_cast<std::size_t>(o)] = best_i;
                }
    }
    if (cache) cache->iv.assign({std::move(arg), x.shape()});
    return out;
}

Tensor MaxPool3d::backward(const Tensor& gy, const Cache& cache) {
    Tensor gx(cache.iv.at(1));
    const auto& arg = cache.iv.at(0);
    for (long o = 0; o < gy.numel(); ++o) {
        const int i = arg[static_cast<std::size_t>(o)];
        if (i >= 0) gx[i] += gy[o];
    }
    return gx;
}

// -------------------------------------------------------------- element-wise

Tensor ReLU::forward(const Tensor& x, Cache* cache) const {
    Tensor y(x.shape());
    for (long i = 0; i < x.numel(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    if (cache) cache->t.assign({y});
    return y;
}

Tensor ReLU::backward(const Tensor& gy, const Cache& cache) {
    const Tensor& y = cache.t.at(0);
    Tensor gx(gy.shape());
    for (long i = 0; i < gy.numel(); ++i) gx[i] = y[i] > 0.0 ? gy[i] : 0.0;
    return gx;
}

Tensor Sigmoid::forward(const Tensor& x, Cache* cache) const {
    Tensor y(x.shape());
    for (long i = 0; i < x.numel(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    if (cache) cache->t.assign({y});
    return y;
}

Tensor Sigmoid::backward(const Tensor& gy, const Cache& cache) {
    const Tensor& y = cache.t.at(0);
    Tensor gx(gy.shape());
    for (long i = 0; i < gy.numel(); ++i) gx[i] = gy[i] * y[i] * (1.0 - y[i]);
    return gx;
}

// -------------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features) : in_f_(in_features), out_f_(out_features) {
    w.value = Tensor({out_features, in_features});
    b.value = Tensor({out_features});
}

std::vector<int> Linear::out_shape(const std::vector<int>& in) const {
    if (Tensor::count(in) != in_f_)
        throw ShapeError("linear: expected " + std::to_string(in_f_) + " features, got " +
                         Tensor::shape_string(in));
    return {out_f_};
}

void Linear::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    out.push_back({prefix + ".w", &w});
    out.push_back({prefix + ".b", &b});
}

void Linear::init_params(Rng& rng) {
    he_uniform(w.value, in_f_, rng);
    b.value.set_zero();
}

Tensor Linear::forward(const Tensor& x, Cache* cache) const {
    if (x.numel() != in_f_)
        throw ShapeError("linear: expected " + std::to_string(in_f_) + " features, got " +
                         x.shape_string());
    Tensor y({out_f_});
    CRowMap W(w.value.data(), out_f_, in_f_);
    CVecMap xv(x.data(), in_f_);
    VecMap yv(y.data(), out_f_);
    CVecMap bv(b.value.data(), out_f_);
    yv.noalias() = W * xv + bv;
    if (cache) cache->t.assign({x});
    return y;
}

Tensor Linear::backward(const Tensor& gy, const Cache& cache) {
    const Tensor& x = cache.t.at(0);
    check_shape(gy, {out_f_}, "linear backward");
    RowMap GW(w.ensure_grad().data(), out_f_, in_f_);
    VecMap GB(b.ensure_grad().data(), out_f_);
    CVecMap gyv(gy.data(), out_f_);
    CVecMap xv(x.data(), in_f_);
    GW.noalias() += gyv * xv.transpose();
    GB += gyv;
    Tensor gx(x.shape());
    VecMap gxv(gx.data(), in_f_);
    CRowMap W(w.value.data(), out_f_, in_f_);
    gxv.noalias() = W.transpose() * gyv;
    return gx;
}

// ------------------------------------------------------------------- pooling

namespace {

struct LerpAxis {
    int i0, i1;
    double f;
};

LerpAxis lerp_axis(int out_i, int out_n, int in_n) {
    const double s = std::clamp((out_i + 0.5) * static_cast<double>(in_n) / out_n - 0.5, 0.0,
                                in_n - 1.0);
    const int i0 = static_cast<int>(s);
    return {i0, std::min(i0 + 1, in_n - 1), s - i0};
}

} // namespace

std::vector<int> BilinearResize2d::out_shape(const std::vector<int>& in) const {
    return {in[0], oh_, ow_};
}

Tensor BilinearResize2d::forward(const Tensor& x, Cache* cache) const {
    expect_rank(x, 3, "bilinear_resize2d");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    Tensor y({C, oh_, ow_});
    for (int oy = 0; oy < oh_; ++oy) {
        const auto ay = lerp_axis(oy, oh_, H);
        for (int ox = 0; ox < ow_; ++ox) {
            const auto ax = lerp_axis(ox, ow_, W);
            for (int c = 0; c < C; ++c) {
                const double top =
                    x.at(c, ay.i0, ax.i0) * (1 - ax.f) + x.at(c, ay.i0, ax.i1) * ax.f;
                const double bot =
                    x.at(c, ay.i1, ax.i0) * (1 - ax.f) + x.at(c, ay.i1, ax.i1) * ax.f;
                y.at(c, oy, ox) = top * (1 - ay.f) + bot * ay.f;
            }
        }
    }
    if (cache) cache->iv.assign({x.shape()});
    return y;
}

Tensor BilinearResize2d::backward(const Tensor& gy, const Cache& cache) {
    const auto& shape = cache.iv.at(0);
    Tensor gx(shape);
    const int C = shape[0], H = shape[1], W = shape[2];
    for (int oy = 0; oy < oh_; ++oy) {
        const auto ay = lerp_axis(oy, oh_, H);
        for (int ox = 0; ox < ow_; ++ox) {
            const auto ax = lerp_axis(ox, ow_, W);
            for (int c = 0; c < C; ++c) {
                const double g = gy.at(c, oy, ox);
                gx.at(c, ay.i0, ax.i0) += g * (1 - ay.f) * (1 - ax.f);
                gx.at(c, ay.i0, ax.i1) += g * (1 - ay.f) * ax.f;
                gx.at(c, ay.i1, ax.i0) += g * ay.f * (1 - ax.f);
                gx.at(c, ay.i1, ax.i1) += g * ay.f * ax.f;
            }
        }
    }
    return gx;
}

std::vector<int> NearestUpsample2d::out_shape(const std::vector<int>& in) const {
    return {in[0], in[1] * 2, in[2] * 2};
}

Tensor NearestUpsample2d::forward(const Tensor& x, Cache* cache) const {
    expect_rank(x, 3, "nearest_upsample2d");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    Tensor y({C, H * 2, W * 2});
    for (int c = 0; c < C; ++c) {
        const double* in = x.data() + static_cast<long>(c) * H * W;
        double* out = y.data() + static_cast<long>(c) * H * W * 4;
        for (int iy = 0; iy < H; ++iy)
            for (int ix = 0; ix < W; ++ix) {
                const double v = in[iy * W + ix];
                double* o = out + (2 * iy) * (2 * W) + 2 * ix;
                o[0] = v;
                o[1] = v;
                o[2 * W] = v;
                o[2 * W + 1] = v;
            }
    }
    if (cache) cache->iv.assign({x.shape()});
    return y;
}

Tensor NearestUpsample2d::backward(const Tensor& gy, const Cache& cache) {
    const auto& shape = cache.iv.at(0);
    Tensor gx(shape);
    const int C = shape[0], H = shape[1], W = shape[2];
    for (int c = 0; c < C; ++c) {
        double* out = gx.data() + static_cast<long>(c) * H * W;
        const double* in = gy.data() + static_cast<long>(c) * H * W * 4;
        for (int iy = 0; iy < H; ++iy)
            for (int ix = 0; ix < W; ++ix) {
                const double* g = in + (2 * iy) * (2 * W) + 2 * ix;
                out[iy * W + ix] = g[0] + g[1] + g[2 * W] + g[2 * W + 1];
            }
    }
    return gx;
}

std::vector<int> GlobalAvgPool2d::out_shape(const std::vector<int>& in) const {
    return {in[0], 1, 1};
}

Tensor GlobalAvgPool2d::forward(const Tensor& x, Cache* cache) const {
    expect_rank(x, 3, "global_avg_pool");
    const int C = x.dim(0);
    const long hw = static_cast<long>(x.dim(1)) * x.dim(2);
    Tensor y({C, 1, 1});
    for (int c = 0; c < C; ++c) {
        const double* plane = x.data() + c * hw;
        double s = 0.0;
        for (long i = 0; i < hw; ++i) s += plane[i];
        y[c] = s / static_cast<double>(hw);
    }
    if (cache) cache->iv.assign({x.shape()});
    return y;
}

Tensor GlobalAvgPool2d::backward(const Tensor& gy, const Cache& cache) {
    const auto& shape = cache.iv.at(0);
    Tensor gx(shape);
    const int C = shape[0];
    const long hw = static_cast<long>(shape[1]) * shape[2];
    for (int c = 0; c < C; ++c) {
        const double g = gy[c] / static_cast<double>(hw);
        double* plane = gx.data() + c * hw;
        for (long i = 0; i < hw; ++i) plane[i] = g;
    }
    return gx;
}

std::vector<int> MeanOverDepth::out_shape(const std::vector<int>& in) const {
    return {in[0], in[2], in[3]};
}

Tensor MeanOverDepth::forward(const Tensor& x, Cache* cache) const {
    expect_rank(x, 4, "mean_over_depth");
    const int C = x.dim(0), D = x.dim(1);
    const long hw = static_cast<long>(x.dim(2)) * x.dim(3);
    Tensor y({C, x.dim(2), x.dim(3)});
    for (int c = 0; c < C; ++c) {
        double* out = y.data() + c * hw;
        for (int d = 0; d < D; ++d) {
            const double* plane = x.data() + (static_cast<long>(c) * D + d) * hw;
            for (long i = 0; i < hw; ++i) out[i] += plane[i];
        }
        for (long i = 0; i < hw; ++i) out[i] /= D;
    }
    if (cache) cache->iv.assign({x.shape()});
    return y;
}

Tensor MeanOverDepth::backward(const Tensor& gy, const Cache& cache) {
    const auto& shape = cache.iv.at(0);
    Tensor gx(shape);
    const int C = shape[0], D = shape[1];
    const long hw = static_cast<long>(shape[2]) * shape[3];
    for (int c = 0; c < C; ++c)
        for (int d = 0; d < D; ++d) {
            double* plane = gx.data() + (static_cast<long>(c) * D + d) * hw;
            const double* g = gy.data() + c * hw;
            for (long i = 0; i < hw; ++i) plane[i] = g[i] / D;
        }
    return gx;
}

} // namespace tanet::nn
