// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "egru/errors.hpp"

namespace egru {

/// Dense 32-bit float vector. Length is the declared dimension.
using DenseVector = std::vector<float>;

/// One graded spike: the emitting unit's index and its (nonzero) magnitude.
struct Event {
    std::uint32_t index;
    float value;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Sparse activation vector: the nonzero entries of y, sorted by unit index.
/// Invariants: indices strictly ascending and < dim; values nonzero.
struct EventVector {
    std::uint32_t dim = 0;
    std::vector<Event> events;

    std::size_t count() const { return events.size(); }
    bool empty() const { return events.empty(); }

    void check_invariants() const;

    friend bool operator==(const EventVector&, const EventVector&) = default;
};

/// Row-major dense matrix, the construction-side counterpart of CsrMatrix.
struct DenseMatrix {
    std::uint32_t n_rows = 0;
    std::uint32_t n_cols = 0;
    std::vector<float> values; // n_rows * n_cols

    DenseMatrix() = default;
    DenseMatrix(std::uint32_t rows, std::uint32_t cols)
        : n_rows(rows), n_cols(cols), values(static_cast<std::size_t>(rows) * cols, 0.0f) {}

    float& at(std::uint32_t r, std::uint32_t c) {
        return values[static_cast<std::size_t>(r) * n_cols + c];
    }
    float at(std::uint32_t r, std::uint32_t c) const {
        return values[static_cast<std::size_t>(r) * n_cols + c];
    }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

/// Scatter an EventVector into a dense vector of its declared dimension.
DenseVector densify(const EventVector& v);

/// Collect the nonzero entries of a dense vector, ascending index order.
EventVector sparsify(const DenseVector& v);

inline void require_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw DimensionError(std::string(what) + ": length " + std::to_string(got) +
                             ", expected " + std::to_string(want));
    }
}

} // namespace egru
