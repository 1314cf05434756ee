#include "npmerge/permutation.hpp"

#include <numeric>

#include "npmerge/errors.hpp"

namespace npmerge {

Permutation::Permutation(std::vector<std::int64_t> m) : map(std::move(m)) { validate(); }

Permutation Permutation::identity(std::int64_t n) {
    Permutation p;
    p.map.resize(static_cast<std::size_t>(n));
    std::iota(p.map.begin(), p.map.end(), 0);
    return p;
}

bool Permutation::is_identity() const {
    for (std::int64_t i = 0; i < size(); ++i)
        if (map[static_cast<std::size_t>(i)] != i) return false;
    return true;
}

Permutation Permutation::inverse() const {
    Permutation inv;
    inv.map.assign(map.size(), 0);
    for (std::int64_t i = 0; i < size(); ++i) inv.map[static_cast<std::size_t>(map[static_cast<std::size_t>(i)])] = i;
    return inv;
}

Permutation Permutation::compose(const Permutation& q) const {
    if (size() != q.size()) throw DimError("compose: permutation sizes differ");
    Permutation r;
    r.map.resize(map.size());
    for (std::int64_t i = 0; i < size(); ++i)
        r.map[static_cast<std::size_t>(i)] = q.map[static_cast<std::size_t>(map[static_cast<std::size_t>(i)])];
    return r;
}

Tensor Permutation::matrix() const {
    Tensor m({size(), size()});
    for (std::int64_t i = 0; i < size(); ++i) m.at(i, map[static_cast<std::size_t>(i)]) = 1.0;
    return m;
}

void Permutation::validate() const {
    std::vector<bool> seen(map.size(), false);
    for (std::int64_t v : map) {
        if (v < 0 || v >= size() || seen[static_cast<std::size_t>(v)])
            throw InputError("permutation map is not a bijection");
        seen[static_cast<std::size_t>(v)] = true;
    }
}

Tensor apply_permutation_rows(const Tensor& t, const Permutation& p) {
    if (t.ndim() < 1 || t.extent(0) != p.size())
        throw DimError("apply_permutation_rows: permutation length " + std::to_string(p.size()) +
                       " does not match leading extent of " + t.shape_str());
    Tensor out(t.shape());
    const std::int64_t block = t.size() / t.extent(0);
    for (std::int64_t i = 0; i < p.size(); ++i) {
        const double* src = t.data() + p.map[static_cast<std::size_t>(i)] * block;
        double* dst = out.data() + i * block;
        for (std::int64_t j = 0; j < block; ++j) dst[j] = src[j];
    }
    return out;
}

Tensor apply_permutation_cols(const Tensor& t, const Permutation& p) {
    if (t.ndim() != 2 || t.cols() != p.size())
        throw DimError("apply_permutation_cols: permutation length " + std::to_string(p.size()) +
                       " does not match trailing extent of " + t.shape_str());
    Tensor out(t.shape());
    for (std::int64_t i = 0; i < t.rows(); ++i)
        for (std::int64_t j = 0; j < t.cols(); ++j) out.at(i, j) = t.at(i, p.map[static_cast<std::size_t>(j)]);
    return out;
}

}  // namespace npmerge
