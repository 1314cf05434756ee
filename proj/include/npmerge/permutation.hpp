#pragma once

#include <cstdint>
#include <vector>

#include "npmerge/tensor.hpp"

namespace npmerge {

// A bijection on {0..n-1}. Semantics everywhere: output slot i takes input
// index map[i].
struct Permutation {
    std::vector<std::int64_t> map;

    Permutation() = default;
    explicit Permutation(std::vector<std::int64_t> m);

    static Permutation identity(std::int64_t n);

    std::int64_t size() const { return static_cast<std::int64_t>(map.size()); }
    bool is_identity() const;

    Permutation inverse() const;
    // Matrix semantics: matrix(compose(p, q)) == matmul(matrix(p), matrix(q)).
    Permutation compose(const Permutation& q) const;
    Tensor matrix() const;  // [n x n], row i has a one at column map[i]

    void validate() const;  // throws InputError unless map is a bijection
};

// Reorders the leading axis: out[i, ...] = t[p.map[i], ...]. Works for any
// rank >= 1.
Tensor apply_permutation_rows(const Tensor& t, const Permutation& p);
// Reorders the trailing axis of a matrix: out[:, j] = t[:, p.map[j]].
Tensor apply_permutation_cols(const Tensor& t, const Permutation& p);

}  // namespace npmerge
