// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0
//
// CSR storage and the two matvec kernels: dense-input (every stored weight
// is touched) and event-driven (only rows of active presynaptic units are
// touched). Both accumulate in a fixed order so that single-PE, multi-PE
// and dense-reference execution agree bit for bit.

#pragma once

#include <cstdint>
#include <vector>

#include "egru/types.hpp"

namespace egru {

/// Compressed sparse row matrix of 32-bit floats with 32-bit index arrays.
/// Storage element count is 2*NZ + n_rows + 1, all elements 4 bytes wide.
struct CsrMatrix {
    std::uint32_t n_rows = 0;
    std::uint32_t n_cols = 0;
    std::vector<float> values;              // length NZ
    std::vector<std::uint32_t> col_indices; // length NZ, ascending within a row
    std::vector<std::uint32_t> row_extents; // length n_rows + 1

    std::size_t nnz() const { return values.size(); }

    static CsrMatrix zeros(std::uint32_t rows, std::uint32_t cols);

    /// Throws DimensionError if any structural invariant is violated.
    void check_invariants() const;

    friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

/// Build a CsrMatrix from a row-major dense matrix, dropping entries with
/// |w| <= zero_tolerance.
CsrMatrix csr_from_dense(const DenseMatrix& dense, float zero_tolerance);

/// Exact inverse of csr_from_dense on its output.
DenseMatrix csr_to_dense(const CsrMatrix& m);

/// 4-byte array elements held by the matrix: 2*NZ + n_rows + 1.
std::size_t csr_storage_count(const CsrMatrix& m);
std::size_t csr_storage_bytes(const CsrMatrix& m);

/// out[i] = sum over row i of values[k] * x[col_indices[k]], ascending k.
/// Performs exactly NZ multiply-accumulates; added to *macs when given.
DenseVector dense_matvec(const CsrMatrix& m, const DenseVector& x,
                         std::uint64_t* macs = nullptr);

/// Event-driven matvec. m_t holds the recurrent matrix transposed: row s is
/// the outgoing weight row of presynaptic unit s, so one event selects one
/// contiguous row. Events are processed in ascending index order and each
/// destination accumulates contributions in that same order.
DenseVector event_matvec(const CsrMatrix& m_t, const EventVector& y,
                         std::uint64_t* macs = nullptr);

/// Same kernel, accumulating into a caller-provided vector (zeroed or not).
void event_matvec_into(const CsrMatrix& m_t, const EventVector& y,
                       DenseVector& out, std::uint64_t* macs = nullptr);

/// Zero the smallest-magnitude entries until at least
/// floor(target_sparsity * size) entries are zero. Ties break toward the
/// lowest flat index so fixtures are reproducible.
DenseMatrix magnitude_prune(const DenseMatrix& dense, double target_sparsity);

/// Rows [begin, end) as their own matrix.
CsrMatrix slice_rows(const CsrMatrix& m, std::uint32_t begin, std::uint32_t end);

/// Columns [begin, end) as their own matrix, indices rebased by -begin.
CsrMatrix slice_cols(const CsrMatrix& m, std::uint32_t begin, std::uint32_t end);

/// NZ entries of m that fall in rows [begin, end).
std::size_t nnz_in_rows(const CsrMatrix& m, std::uint32_t begin, std::uint32_t end);

/// NZ entries of m that fall in columns [begin, end).
std::size_t nnz_in_cols(const CsrMatrix& m, std::uint32_t begin, std::uint32_t end);

} // namespace egru
