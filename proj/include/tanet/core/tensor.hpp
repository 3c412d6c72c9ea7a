#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tanet/core/error.hpp"

namespace tanet {

// Dense row-major double tensor. Value semantics; copies are explicit and
// intentional. All network math in this project runs in double precision.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<std::size_t>(count(shape_)), 0.0);
    }

    Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, double v) {
        Tensor t(std::move(shape));
        t.fill(v);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    long numel() const { return static_cast<long>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](long i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](long i) const { return data_[static_cast<std::size_t>(i)]; }

    template <typename... Ix>
    double& at(Ix... ix) { return data_[static_cast<std::size_t>(offset(ix...))]; }

    template <typename... Ix>
    double at(Ix... ix) const { return data_[static_cast<std::size_t>(offset(ix...))]; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    void set_zero() { fill(0.0); }

    // Reinterprets the buffer under a new shape with the same element count.
    Tensor reshaped(std::vector<int> shape) const {
        if (count(shape) != numel())
            throw ShapeError("reshape from " + shape_string(shape_) + " to " +
                             shape_string(shape) + " changes element count");
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static std::string shape_string(const std::vector<int>& s) {
        std::ostringstream os;
        os << '(';
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) os << 'x';
            os << s[i];
        }
        os << ')';
        return os.str();
    }

    std::string shape_string() const { return shape_string(shape_); }

    static long count(const std::vector<int>& shape) {
        long n = 1;
        for (int d : shape) {
            if (d < 0) throw ShapeError("negative dimension in " + shape_string(shape));
            n *= d;
        }
        return n;
    }

private:
    template <typename... Ix>
    long offset(Ix... ix) const {
        constexpr int n = sizeof...(Ix);
        const long idx[n] = {static_cast<long>(ix)...};
        long off = 0;
        for (int d = 0; d < n; ++d) off = off * shape_[static_cast<std::size_t>(d)] + idx[d];
        return off;
    }

    std::vector<int> shape_;
    std::vector<double> data_;
};

inline void check_shape(const Tensor& t, const std::vector<int>& want,
                        const char* what) {
    if (t.shape() != want)
        throw ShapeError(std::string(what) + ": expected " +
                         Tensor::shape_string(want) + ", got " + t.shape_string());
}

} // namespace tanet
