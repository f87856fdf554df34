// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Contiguous unit-to-PE assignment and per-PE SRAM budgeting. Contiguous
// blocks (rather than round-robin) make PE-rank-order concatenation of
// fragments produce globally sorted event indices with no sort step.

#pragma once

#include <cstdint>
#include <vector>

#include "egru/cell.hpp"
#include "egru/errors.hpp"

namespace egru {

/// SRAM limits of one processing element. Defaults model a 128 KB tile with
/// one 32 KB bank reserved for instructions and three banks (96 KB) of data
/// memory.
struct PeBudget {
    std::uint32_t sram_total = 131072;
    std::uint32_t instruction_reserved = 32768;
    std::uint32_t data_available = 98304;
    /// Fraction of a layer's units budgeted for the assembled incoming
    /// event buffer. Events are eight bytes; a fully dense buffer would be
    /// n_units of them.
    double recurrent_buffer_fraction = 0.25;

    void check_invariants() const;
};

struct UnitRange {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;

    std::uint32_t size() const { return end - begin; }
    bool contains(std::uint32_t i) const { return i >= begin && i < end; }

    friend bool operator==(const UnitRange&, const UnitRange&) = default;
};

/// Assignment of one layer's units to a PE group, with the memory footprint
/// each PE would carry.
struct PartitionPlan {
    std::uint32_t layer_id = 0;
    std::uint32_t n_units = 0;
    std::uint32_t n_pes = 0;
    std::vector<UnitRange> ranges;              // disjoint, ordered, cover [0, n_units)
    std::vector<std::uint64_t> footprints;      // weights + parameters + variables, bytes
    std::vector<std::uint64_t> weight_footprints; // CSR slices only, bytes

    /// PE rank owning unit i.
    std::uint32_t owner_of(std::uint32_t unit) const;

    void check_invariants() const;
};

/// Weight bytes of one PE's slices: CSR storage of the input-matrix row
/// slice and the recurrent-transpose column slice, all three gates.
std::uint64_t slice_weight_bytes(const EgruLayerParams& p, const UnitRange& range);

/// Non-weight bytes: bias/threshold slices, state and gate temporaries, the
/// outgoing fragment, and the budgeted incoming event buffer.
std::uint64_t slice_variable_bytes(const EgruLayerParams& p, const UnitRange& range,
                                   const PeBudget& budget);

/// Split n_units into contiguous blocks of ceil(n_units / n_pes) (the last
/// block smaller) and compute footprints. Throws BudgetExceeded if any PE's
/// footprint exceeds budget.data_available.
PartitionPlan plan_partition(std::uint32_t n_units, std::uint32_t n_pes,
                             const EgruLayerParams& params, const PeBudget& budget,
                             std::uint32_t layer_id = 0);

/// Proportional PE-group sizes (largest remainder, at least one PE each).
/// Requires total_pes >= unit_counts.size().
std::vector<std::uint32_t> allocate_pe_groups(const std::vector<std::uint32_t>& unit_counts,
                                              std::uint32_t total_pes);

/// Plan a whole stack onto total_pes processing elements. Layers get
/// disjoint proportional groups when total_pes >= layer count; otherwise
/// all layers share one group of total_pes PEs and per-PE footprints are
/// summed before the budget check.
std::vector<PartitionPlan> plan_model(const std::vector<EgruLayerParams>& layers,
                                      std::uint32_t total_pes, const PeBudget& budget);

} // namespace egru
