#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npmerge/errors.hpp"

namespace npmerge {

// Dense row-major float64 array. Extents are strictly positive and
// data.size() == product(extents). Public operations keep entries finite.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> shape);  // zero-filled
    Tensor(std::vector<std::int64_t> shape, std::vector<double> data);

    static Tensor full(std::vector<std::int64_t> shape, double value);
    // 2-d convenience for fixtures: every row must have the same width.
    static Tensor from_rows(const std::vector<std::vector<double>>& rows);

    const std::vector<std::int64_t>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    std::int64_t extent(int axis) const;
    std::int64_t rows() const { return extent(0); }
    std::int64_t cols() const { return extent(1); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
    double& at(std::int64_t r, std::int64_t c) { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
    double at(std::int64_t r, std::int64_t c) const { return data_[static_cast<std::size_t>(r * cols_ + c)]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool empty() const { return data_.empty(); }

    // Throws NumericError naming `what` if any entry is NaN or Inf.
    void check_finite(const std::string& what) const;

    std::string shape_str() const;

private:
    std::vector<std::int64_t> shape_;
    std::vector<double> data_;
    std::int64_t cols_ = 0;  // trailing extent, cached for 2-d indexing
};

// Matrix products with a fixed accumulation order (i, k, j loop nest and
// friends), so results are bit-reproducible run to run.
Tensor matmul(const Tensor& a, const Tensor& b);     // [m x k] . [k x n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a . b^T, b is [n x k]
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T . b, a is [k x m]

Tensor transpose(const Tensor& a);

// Numerically stable logistic; no overflow for |x| up to ~700.
double sigmoid(double x);
Tensor sigmoid(const Tensor& x);

double max_abs_diff(const Tensor& a, const Tensor& b);

// out[i, :] = t[idx[i], :]; indices may repeat.
Tensor gather_rows(const Tensor& t, const std::vector<std::int64_t>& idx);
Tensor slice_rows(const Tensor& t, std::int64_t begin, std::int64_t end);

}  // namespace npmerge
