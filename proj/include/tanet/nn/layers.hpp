#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tanet/core/rng.hpp"
#include "tanet/core/tensor.hpp"

namespace tanet::nn {

// Learnable tensor. Gradient storage appears on first accumulation so
// forward-only use never pays for it.
struct Param {
    Tensor value;
    Tensor grad;

    bool has_grad() const { return !grad.empty(); }
    Tensor& ensure_grad() {
        if (grad.empty()) grad = Tensor(value.shape());
        return grad;
    }
    void zero_grad() {
        if (!grad.empty()) grad.set_zero();
    }
};

struct NamedParam {
    std::string name;
    Param* param;
};

// Per-invocation saved state. Kept outside the node so one set of weights
// can be applied to several inputs in the same step (the attention decoder
// runs once per clip frame) and so inference never allocates caches.
struct Cache {
    std::vector<Tensor> t;
    std::vector<std::vector<int>> iv;
    std::vector<Cache> kids;
};

// Single-input differentiable operator. forward() is const: weights are
// read-only during evaluation, so concurrent forward passes over one model
// are safe. backward() accumulates into Param::grad and returns the
// gradient w.r.t. the forward input.
class Node {
public:
    virtual ~Node() = default;
    virtual Tensor forward(const Tensor& x, Cache* cache) const = 0;
    virtual Tensor backward(const Tensor& gy, const Cache& cache) = 0;
    virtual std::vector<int> out_shape(const std::vector<int>& in) const = 0;
    virtual void collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
        (void)prefix;
        (void)out;
    }
    virtual void init_params(Rng& rng) { (void)rng; }
};

class Sequential : public Node {
public:
    Sequential() = default;

    Sequential& add(std::string name, std::unique_ptr<Node> node) {
        names_.push_back(std::move(name));
        nodes_.push_back(std::move(node));
        return *this;
    }

    template <typename T, typename... Args>
    Sequential& emplace(std::string name, Args&&... args) {
        return add(std::move(name), std::make_unique<T>(std::forward<Args>(args)...));
    }

    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void init_params(Rng& rng) override;

    std::size_t size() const { return nodes_.size(); }

private:
    std::vector<std::string> names_;
    std::vector<std::unique_ptr<Node>> nodes_;
};

// 2-D convolution over (C,H,W) input, weight (out_c, in_c, kh, kw).
class Conv2d : public Node {
public:
    Conv2d(int in_c, int out_c, int kh, int kw, int sh, int sw, int ph, int pw);
    Conv2d(int in_c, int out_c, int k, int s, int p) : Conv2d(in_c, out_c, k, k, s, s, p, p) {}

    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void init_params(Rng& rng) override;

    Param w, b;

private:
    int in_c_, out_c_, kh_, kw_, sh_, sw_, ph_, pw_;
};

// 3-D convolution over (C,D,H,W) input, weight (out_c, in_c, kd, kh, kw).
class Conv3d : public Node {
public:
    Conv3d(int in_c, int out_c, int kd, int kh, int kw, int sd, int sh, int sw, int pd,
           int ph, int pw);

    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void init_params(Rng& rng) override;

    Param w, b;

private:
    int in_c_, out_c_, kd_, kh_, kw_, sd_, sh_, sw_, pd_, ph_, pw_;
};

// Transposed 2-D convolution (learned upsampling). Weight layout
// (in_c, out_c, kh, kw); output size (H-1)*s + k - 2p per axis.
class ConvTranspose2d : public Node {
public:
    ConvTranspose2d(int in_c, int out_c, int k, int s, int p);

    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void init_params(Rng& rng) override;

    Param w, b;

private:
    int in_c_, out_c_, k_, s_, p_;
};

class MaxPool2d : public Node {
public:
    MaxPool2d(int kh, int kw, int sh, int sw, int ph = 0, int pw = 0);
    MaxPool2d(int k, int s) : MaxPool2d(k, k, s, s) {}

    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;

private:
    int kh_, kw_, sh_, sw_, ph_, pw_;
};

class MaxPool3d : public Node {
public:
    MaxPool3d(int kd, int kh, int kw, int sd, int sh, int sw);

    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;

private:
    int kd_, kh_, kw_, sd_, sh_, sw_;
};

class ReLU : public Node {
public:
    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override { return in; }
};

class Sigmoid : public Node {
public:
    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override { return in; }
};

// Fully connected layer; flattens whatever shape it receives.
class Linear : public Node {
public:
    Linear(int in_features, int out_features);

    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) override;
    void init_params(Rng& rng) override;

    Param w, b;

private:
    int in_f_, out_f_;
};

// Fixed-size bilinear resample of (C,H,W), pixel centers aligned. Used to
// bridge resolution differences between networks, with a real adjoint so
// gradients can cross the resize.
class BilinearResize2d : public Node {
public:
    BilinearResize2d(int out_h, int out_w) : oh_(out_h), ow_(out_w) {}

    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;

private:
    int oh_, ow_;
};

// Nearest-neighbor 2x spatial upsample of (C,H,W).
class NearestUpsample2d : public Node {
public:
    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;
};

// (C,H,W) -> (C,1,1) spatial mean.
class GlobalAvgPool2d : public Node {
public:
    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;
};

// (C,D,H,W) -> (C,H,W) mean over the depth axis.
class MeanOverDepth : public Node {
public:
    Tensor forward(const Tensor& x, Cache* cache) const override;
    Tensor backward(const Tensor& gy, const Cache& cache) override;
    std::vector<int> out_shape(const std::vector<int>& in) const override;
};

inline int conv_out_dim(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

} // namespace tanet::nn
