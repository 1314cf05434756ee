#include "npmerge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace npmerge {

namespace {

std::int64_t checked_product(const std::vector<std::int64_t>& shape) {
    if (shape.empty()) throw DimError("tensor shape must have at least one extent");
    std::int64_t n = 1;
    for (std::int64_t e : shape) {
        if (e <= 0) throw DimError("tensor extents must be strictly positive");
        n *= e;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(checked_product(shape_)), 0.0);
    cols_ = shape_.back();
}

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_product(shape_) != static_cast<std::int64_t>(data_.size()))
        throw DimError("tensor data length does not match shape");
    cols_ = shape_.back();
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value) {
    Tensor t(std::move(shape));
    for (double& v : t.data_) v = value;
    return t;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw DimError("from_rows: no rows");
    const std::int64_t c = static_cast<std::int64_t>(rows[0].size());
    Tensor t({static_cast<std::int64_t>(rows.size()), c});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<std::int64_t>(rows[r].size()) != c)
            throw DimError("from_rows: ragged rows");
        for (std::int64_t j = 0; j < c; ++j) t.at(static_cast<std::int64_t>(r), j) = rows[r][static_cast<std::size_t>(j)];
    }
    return t;
}

std::int64_t Tensor::extent(int axis) const {
    if (axis < 0 || axis >= ndim()) throw DimError("tensor axis out of range");
    return shape_[static_cast<std::size_t>(axis)];
}

void Tensor::check_finite(const std::string& what) const {
    for (double v : data_)
        if (!std::isfinite(v)) throw NumericError("non-finite value in " + what);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << "]";
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows())
        throw DimError("matmul: incompatible shapes " + a.shape_str() + " and " + b.shape_str());
    const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t l = 0; l < k; ++l) {
            const double aik = pa[i * k + l];
            const double* brow = pb + l * n;
            double* crow = pc + i * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.cols())
        throw DimError("matmul_nt: incompatible shapes " + a.shape_str() + " and " + b.shape_str());
    const std::int64_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor c({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::int64_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        for (std::int64_t j = 0; j < n; ++j) {
            const double* brow = pb + j * k;
            double acc = 0.0;
            for (std::int64_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
            pc[i * n + j] = acc;
        }
    }
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.rows() != b.rows())
        throw DimError("matmul_tn: incompatible shapes " + a.shape_str() + " and " + b.shape_str());
    const std::int64_t k = a.rows(), m = a.cols(), n = b.cols();
    Tensor c({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::int64_t l = 0; l < k; ++l) {
        const double* arow = pa + l * m;
        const double* brow = pb + l * n;
        for (std::int64_t i = 0; i < m; ++i) {
            const double ali = arow[i];
            double* crow = pc + i * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += ali * brow[j];
        }
    }
    return c;
}

Tensor transpose(const Tensor& a) {
    if (a.ndim() != 2) throw DimError("transpose: expected a 2-d tensor");
    Tensor t({a.cols(), a.rows()});
    for (std::int64_t i = 0; i < a.rows(); ++i)
        for (std::int64_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
    return t;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.vec()) v = sigmoid(v);
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Tensor gather_rows(const Tensor& t, const std::vector<std::int64_t>& idx) {
    if (t.ndim() < 1) throw DimError("gather_rows: rank-0 tensor");
    if (idx.empty()) throw InputError("gather_rows: empty index list");
    const std::int64_t block = t.size() / t.extent(0);
    std::vector<std::int64_t> shape = t.shape();
    shape[0] = static_cast<std::int64_t>(idx.size());
    Tensor out(shape);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= t.extent(0)) throw InputError("gather_rows: index out of range");
        const double* src = t.data() + idx[i] * block;
        double* dst = out.data() + static_cast<std::int64_t>(i) * block;
        for (std::int64_t j = 0; j < block; ++j) dst[j] = src[j];
    }
    return out;
}

Tensor slice_rows(const Tensor& t, std::int64_t begin, std::int64_t end) {
    if (begin < 0 || end > t.extent(0) || begin >= end) throw InputError("slice_rows: bad range");
    const std::int64_t block = t.size() / t.extent(0);
    std::vector<std::int64_t> shape = t.shape();
    shape[0] = end - begin;
    Tensor out(shape);
    const double* src = t.data() + begin * block;
    std::copy(src, src + (end - begin) * block, out.data());
    return out;
}

}  // namespace npmerge
