#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "hdmi/common.hpp"

namespace hdmi {

/// Dense row-major real array. Rank 0 is represented as shape {1}; the
/// project only ever needs rank 1 and rank 2. Storage is 64-bit so that
/// gradient checks and the margin-bound verifier are exact to rounding.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double v);
    static Tensor from_vector(std::vector<double> v);
    static Tensor randn(std::vector<std::size_t> shape, Rng& rng, double stddev = 1.0);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t rows() const;
    std::size_t cols() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    bool empty() const { return data_.empty(); }
    double max_abs() const;
    double norm2() const;
    double sum() const;
    bool all_finite() const;
    void assert_finite(const char* what) const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double c);

private:
    std::vector<std::size_t> shape_;
    std::size_t cols_ = 0;  // cached for rank-2 indexing
    std::vector<double> data_;
};

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, double c);
Tensor hadamard(const Tensor& a, const Tensor& b);

// ---- public value-level operations -------------------------------------

/// Matrix product a[m x k] * b[k x n]. Throws ShapeError on mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

/// Numerically stable softmax over a rank-1 tensor with temperature.
/// Output sums to 1 within 1e-12; temperature <= 0 is a DomainError.
Tensor softmax(const Tensor& v, double temperature = 1.0);

/// Row-wise softmax over a rank-2 tensor.
Tensor softmax_rows(const Tensor& m, double temperature = 1.0);

/// Layer normalization of a rank-1 tensor: zero mean / unit variance
/// (biased variance), then elementwise gain and bias. Requires n >= 2.
Tensor layer_norm(const Tensor& v, const Tensor& gain, const Tensor& bias, double eps);

Tensor matvec(const Tensor& m, const Tensor& v);

std::size_t argmax_lowest_id(const Tensor& v);

double dot(const Tensor& a, const Tensor& b);

}  // namespace hdmi
