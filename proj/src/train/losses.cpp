#include "tanet/train/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tanet/core/error.hpp"
#include "tanet/nn/layers.hpp"

namespace tanet::train {
namespace {

// (H, W) of a rank-2 or single-channel rank-3 map.
std::pair<int, int> map_extent(const Tensor& t, const char* who) {
    if (t.rank() == 2) return {t.dim(0), t.dim(1)};
    if (t.rank() == 3 && t.dim(0) == 1) return {t.dim(1), t.dim(2)};
    throw ShapeError(std::string(who) + ": expected an (H,W) or (1,H,W) map, got " +
                     t.shape_string());
}

} // namespace

double bce_loss(const Tensor& pred, const Tensor& target, bool two_sided, Tensor* grad) {
    const auto pe = map_extent(pred, "bce_loss prediction");
    const auto te = map_extent(target, "bce_loss target");
    if (pe != te)
        throw ShapeError("bce_loss: prediction " + pred.shape_string() + " vs target " +
                         target.shape_string() + " size mismatch");
    const long n = pred.numel();
    if (grad && grad->shape() != pred.shape()) *grad = Tensor(pred.shape());
    double sum = 0.0;
    for (long i = 0; i < n; ++i) {
        const double y = target[i];
        const double p = std::clamp(pred[i], kProbEps, 1.0 - kProbEps);
        sum -= y * std::log(p);
        if (two_sided) sum -= (1.0 - y) * std::log1p(-p);
        if (grad) {
            double g = -y / p;
            if (two_sided) g += (1.0 - y) / (1.0 - p);
            // The clamp is flat outside its interval.
            if (pred[i] < kProbEps || pred[i] > 1.0 - kProbEps) g = 0.0;
            (*grad)[i] = g / static_cast<double>(n);
        }
    }
    return sum / static_cast<double>(n);
}

Tensor resample_chw(const Tensor& x, int side) {
    if (x.rank() != 3)
        throw ShapeError("resample_chw expects a (C,H,W) tensor, got " + x.shape_string());
    if (x.dim(1) == side && x.dim(2) == side) return x;
    return nn::BilinearResize2d(side, side).forward(x, nullptr);
}

} // namespace tanet::train
