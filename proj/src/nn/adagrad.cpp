#include "tanet/nn/adagrad.hpp"

#include <cmath>

namespace tanet::nn {

Adagrad::Adagrad(std::vector<NamedParam> params, double lr, double eps)
    : params_(std::move(params)), lr_(lr), eps_(eps) {
    acc_.reserve(params_.size());
    for (const auto& p : params_) acc_.emplace_back(p.param->value.shape());
}

void Adagrad::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param& p = *params_[i].param;
        if (!p.has_grad()) continue;
        Tensor& a = acc_[i];
        for (long j = 0; j < p.value.numel(); ++j) {
            const double g = p.grad[j];
            a[j] += g * g;
            p.value[j] -= lr_ * g / (std::sqrt(a[j]) + eps_);
        }
    }
}

void Adagrad::zero_grads() {
    for (auto& p : params_) p.param->zero_grad();
}

std::vector<std::pair<std::string, Tensor*>> Adagrad::named_accumulators() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.reserve(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i)
        out.emplace_back(params_[i].name, &acc_[i]);
    return out;
}

} // namespace tanet::nn
