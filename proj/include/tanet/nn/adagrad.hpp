#pragma once

#include <string>
#include <vector>

#include "tanet/nn/layers.hpp"

namespace tanet::nn {

// Adagrad: per-element squared-gradient accumulator, update
// theta -= lr * g / (sqrt(acc) + eps). Accumulators are part of training
// state and round-trip through checkpoints.
class Adagrad {
public:
    Adagrad(std::vector<NamedParam> params, double lr, double eps = 1e-10);

    void step();
    void zero_grads();

    double lr() const { return lr_; }
    const std::vector<NamedParam>& params() const { return params_; }

    // Accumulators exposed by parameter name for serialization.
    std::vector<std::pair<std::string, Tensor*>> named_accumulators();

private:
    std::vector<NamedParam> params_;
    std::vector<Tensor> acc_;
    double lr_;
    double eps_;
};

} // namespace tanet::nn
