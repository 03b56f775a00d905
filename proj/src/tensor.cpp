#include "hdmi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hdmi {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size())
        throw ShapeError("tensor data length does not match shape");
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
}

Tensor Tensor::from_vector(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({n}, std::move(v));
}

Tensor Tensor::randn(std::vector<std::size_t> shape, Rng& rng, double stddev) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = stddev * rng.gaussian();
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ShapeError("rows(): tensor is not rank 2");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ShapeError("cols(): tensor is not rank 2");
    return shape_[1];
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

double Tensor::norm2() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::assert_finite(const char* what) const {
    if (!all_finite()) throw DomainError(std::string("non-finite values in ") + what);
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (!same_shape(other)) throw ShapeError("operator+=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    if (!same_shape(other)) throw ShapeError("operator-=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(double c) {
    for (double& v : data_) v *= c;
    return *this;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
    Tensor r = a;
    r += b;
    return r;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
    Tensor r = a;
    r -= b;
    return r;
}

Tensor operator*(const Tensor& a, double c) {
    Tensor r = a;
    r *= c;
    return r;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("hadamard: shape mismatch");
    Tensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] *= b[i];
    return r;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul: operands must be rank 2");
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions disagree");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    // i-k-j order keeps the inner loop contiguous over b and out.
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        double* orow = po + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose: operand must be rank 2");
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

namespace {
void softmax_span(const double* in, double* out, std::size_t n, double temperature) {
    double mx = in[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, in[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp((in[i] - mx) / temperature);
        sum += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}
}  // namespace

Tensor softmax(const Tensor& v, double temperature) {
    if (v.rank() != 1) throw ShapeError("softmax: operand must be rank 1");
    if (v.size() < 1) throw ShapeError("softmax: empty input");
    if (!(temperature > 0.0)) throw DomainError("softmax: temperature must be positive");
    Tensor out({v.size()});
    softmax_span(v.data(), out.data(), v.size(), temperature);
    return out;
}

Tensor softmax_rows(const Tensor& m, double temperature) {
    if (m.rank() != 2) throw ShapeError("softmax_rows: operand must be rank 2");
    if (!(temperature > 0.0)) throw DomainError("softmax_rows: temperature must be positive");
    Tensor out({m.rows(), m.cols()});
    for (std::size_t r = 0; r < m.rows(); ++r)
        softmax_span(m.data() + r * m.cols(), out.data() + r * m.cols(), m.cols(), temperature);
    return out;
}

Tensor layer_norm(const Tensor& v, const Tensor& gain, const Tensor& bias, double eps) {
    if (v.rank() != 1) throw ShapeError("layer_norm: operand must be rank 1");
    if (v.size() < 2) throw DomainError("layer_norm: need at least 2 elements");
    if (!(eps > 0.0)) throw DomainError("layer_norm: eps must be positive");
    if (!gain.same_shape(v) || !bias.same_shape(v))
        throw ShapeError("layer_norm: gain/bias shape mismatch");
    const std::size_t n = v.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += v[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = v[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) out[i] = gain[i] * ((v[i] - mean) * inv_std) + bias[i];
    return out;
}

Tensor matvec(const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || v.rank() != 1) throw ShapeError("matvec: expects matrix and vector");
    if (m.cols() != v.size()) throw ShapeError("matvec: dimension mismatch");
    Tensor out({m.rows()});
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        const double* row = m.data() + i * m.cols();
        for (std::size_t j = 0; j < m.cols(); ++j) s += row[j] * v[j];
        out[i] = s;
    }
    return out;
}

std::size_t argmax_lowest_id(const Tensor& v) {
    if (v.rank() != 1 || v.size() == 0) throw ShapeError("argmax_lowest_id: need nonempty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;  // strict > keeps the lowest id on ties
    return best;
}

double dot(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("dot: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace hdmi
