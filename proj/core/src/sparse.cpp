// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#include "egru/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace egru {

void EventVector::check_invariants() const {
    std::uint32_t prev = 0;
    bool first = true;
    for (const Event& e : events) {
        if (e.index >= dim) {
            throw DimensionError("event index " + std::to_string(e.index) +
                                 " out of range for dim " + std::to_string(dim));
        }
        if (!first && e.index <= prev) {
            throw DimensionError("event indices not strictly ascending");
        }
        if (e.value == 0.0f) {
            throw DimensionError("zero-valued event stored");
        }
        prev = e.index;
        first = false;
    }
}

DenseVector densify(const EventVector& v) {
    DenseVector out(v.dim, 0.0f);
    for (const Event& e : v.events) {
        out[e.index] = e.value;
    }
    return out;
}

EventVector sparsify(const DenseVector& v) {
    EventVector out;
    out.dim = static_cast<std::uint32_t>(v.size());
    for (std::uint32_t i = 0; i < out.dim; ++i) {
        if (v[i] != 0.0f) {
            out.events.push_back({i, v[i]});
        }
    }
    return out;
}

CsrMatrix CsrMatrix::zeros(std::uint32_t rows, std::uint32_t cols) {
    CsrMatrix m;
    m.n_rows = rows;
    m.n_cols = cols;
    m.row_extents.assign(rows + 1u, 0u);
    return m;
}

void CsrMatrix::check_invariants() const {
    if (row_extents.size() != static_cast<std::size_t>(n_rows) + 1) {
        throw DimensionError("row_extents length != n_rows + 1");
    }
    if (row_extents.front() != 0 || row_extents.back() != nnz()) {
        throw DimensionError("row_extents endpoints inconsistent with NZ");
    }
    if (col_indices.size() != nnz()) {
        throw DimensionError("col_indices length != values length");
    }
    for (std::uint32_t r = 0; r < n_rows; ++r) {
        if (row_extents[r] > row_extents[r + 1]) {
            throw DimensionError("row_extents not non-decreasing");
        }
        for (std::uint32_t k = row_extents[r]; k < row_extents[r + 1]; ++k) {
            if (col_indices[k] >= n_cols) {
                throw DimensionError("column index out of range");
            }
            if (k > row_extents[r] && col_indices[k] <= col_indices[k - 1]) {
                throw DimensionError("column indices not strictly ascending in row");
            }
        }
    }
}

CsrMatrix csr_from_dense(const DenseMatrix& dense, float zero_tolerance) {
    CsrMatrix m;
    m.n_rows = dense.n_rows;
    m.n_cols = dense.n_cols;
    m.row_extents.reserve(dense.n_rows + 1u);
    m.row_extents.push_back(0);
    for (std::uint32_t r = 0; r < dense.n_rows; ++r) {
        for (std::uint32_t c = 0; c < dense.n_cols; ++c) {
            const float w = dense.at(r, c);
            if (std::fabs(w) > zero_tolerance) {
                m.values.push_back(w);
                m.col_indices.push_back(c);
            }
        }
        m.row_extents.push_back(static_cast<std::uint32_t>(m.values.size()));
    }
    return m;
}

DenseMatrix csr_to_dense(const CsrMatrix& m) {
    DenseMatrix d(m.n_rows, m.n_cols);
    for (std::uint32_t r = 0; r < m.n_rows; ++r) {
        for (std::uint32_t k = m.row_extents[r]; k < m.row_extents[r + 1]; ++k) {
            d.at(r, m.col_indices[k]) = m.values[k];
        }
    }
    return d;
}

std::size_t csr_storage_count(const CsrMatrix& m) {
    return 2 * m.nnz() + m.n_rows + 1;
}

std::size_t csr_storage_bytes(const CsrMatrix& m) {
    return 4 * csr_storage_count(m);
}

DenseVector dense_matvec(const CsrMatrix& m, const DenseVector& x, std::uint64_t* macs) {
    require_dim(x.size(), m.n_cols, "dense_matvec input");
    DenseVector out(m.n_rows, 0.0f);
    for (std::uint32_t r = 0; r < m.n_rows; ++r) {
        float acc = 0.0f;
        for (std::uint32_t k = m.row_extents[r]; k < m.row_extents[r + 1]; ++k) {
            acc += m.values[k] * x[m.col_indices[k]];
        }
        out[r] = acc;
    }
    if (macs != nullptr) {
        *macs += m.nnz();
    }
    return out;
}

void event_matvec_into(const CsrMatrix& m_t, const EventVector& y, DenseVector& out,
                       std::uint64_t* macs) {
    require_dim(y.dim, m_t.n_rows, "event_matvec input");
    require_dim(out.size(), m_t.n_cols, "event_matvec output");
    std::uint64_t work = 0;
    for (const Event& e : y.events) {
        const std::uint32_t lo = m_t.row_extents[e.index];
        const std::uint32_t hi = m_t.row_extents[e.index + 1];
        for (std::uint32_t k = lo; k < hi; ++k) {
            out[m_t.col_indices[k]] += e.value * m_t.values[k];
        }
        work += hi - lo;
    }
    if (macs != nullptr) {
        *macs += work;
    }
}

DenseVector event_matvec(const CsrMatrix& m_t, const EventVector& y, std::uint64_t* macs) {
    DenseVector out(m_t.n_cols, 0.0f);
    event_matvec_into(m_t, y, out, macs);
    return out;
}

DenseMatrix magnitude_prune(const DenseMatrix& dense, double target_sparsity) {
    const std::size_t size = dense.values.size();
    const auto want_zeros =
        static_cast<std::size_t>(target_sparsity * static_cast<double>(size));

    std::size_t have_zeros = 0;
    for (float w : dense.values) {
        if (w == 0.0f) {
            ++have_zeros;
        }
    }
    if (have_zeros >= want_zeros) {
        return dense;
    }

    // Order nonzero entries by (magnitude, flat index); zero the smallest.
    std::vector<std::uint64_t> order;
    order.reserve(size - have_zeros);
    for (std::uint64_t i = 0; i < size; ++i) {
        if (dense.values[i] != 0.0f) {
            order.push_back(i);
        }
    }
    const std::size_t to_zero = want_zeros - have_zeros;
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(to_zero - 1),
                     order.end(), [&](std::uint64_t a, std::uint64_t b) {
                         const float ma = std::fabs(dense.values[a]);
                         const float mb = std::fabs(dense.values[b]);
                         return ma != mb ? ma < mb : a < b;
                     });
    DenseMatrix out = dense;
    for (std::size_t i = 0; i < to_zero; ++i) {
        out.values[order[i]] = 0.0f;
    }
    return out;
}

CsrMatrix slice_rows(const CsrMatrix& m, std::uint32_t begin, std::uint32_t end) {
    CsrMatrix s;
    s.n_rows = end - begin;
    s.n_cols = m.n_cols;
    const std::uint32_t lo = m.row_extents[begin];
    const std::uint32_t hi = m.row_extents[end];
    s.values.assign(m.values.begin() + lo, m.values.begin() + hi);
    s.col_indices.assign(m.col_indices.begin() + lo, m.col_indices.begin() + hi);
    s.row_extents.reserve(s.n_rows + 1u);
    for (std::uint32_t r = begin; r <= end; ++r) {
        s.row_extents.push_back(m.row_extents[r] - lo);
    }
    return s;
}

CsrMatrix slice_cols(const CsrMatrix& m, std::uint32_t begin, std::uint32_t end) {
    CsrMatrix s;
    s.n_rows = m.n_rows;
    s.n_cols = end - begin;
    s.row_extents.reserve(m.n_rows + 1u);
    s.row_extents.push_back(0);
    for (std::uint32_t r = 0; r < m.n_rows; ++r) {
        for (std::uint32_t k = m.row_extents[r]; k < m.row_extents[r + 1]; ++k) {
            const std::uint32_t c = m.col_indices[k];
            if (c >= begin && c < end) {
                s.values.push_back(m.values[k]);
                s.col_indices.push_back(c - begin);
            }
        }
        s.row_extents.push_back(static_cast<std::uint32_t>(s.values.size()));
    }
    return s;
}

std::size_t nnz_in_rows(const CsrMatrix& m, std::uint32_t begin, std::uint32_t end) {
    return m.row_extents[end] - m.row_extents[begin];
}

std::size_t nnz_in_cols(const CsrMatrix& m, std::uint32_t begin, std::uint32_t end) {
    std::size_t n = 0;
    for (std::uint32_t c : m.col_indices) {
        if (c >= begin && c < end) {
            ++n;
        }
    }
    return n;
}

} // namespace egru
