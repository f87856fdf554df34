// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#include "egru/partition.hpp"

#include <algorithm>
#include <numeric>

namespace egru {

void PeBudget::check_invariants() const {
    if (static_cast<std::uint64_t>(instruction_reserved) + data_available > sram_total) {
        throw DimensionError("PE budget exceeds SRAM size");
    }
    if (recurrent_buffer_fraction < 0.0 || recurrent_buffer_fraction > 1.0) {
        throw DimensionError("recurrent_buffer_fraction outside [0, 1]");
    }
}

std::uint32_t PartitionPlan::owner_of(std::uint32_t unit) const {
    for (std::uint32_t pe = 0; pe < n_pes; ++pe) {
        if (ranges[pe].contains(unit)) {
            return pe;
        }
    }
    throw DimensionError("unit " + std::to_string(unit) + " not covered by plan");
}

void PartitionPlan::check_invariants() const {
    require_dim(ranges.size(), n_pes, "plan ranges");
    std::uint32_t cursor = 0;
    for (const UnitRange& r : ranges) {
        if (r.begin != cursor || r.end < r.begin) {
            throw DimensionError("plan ranges not contiguous");
        }
        cursor = r.end;
    }
    if (cursor != n_units) {
        throw DimensionError("plan ranges do not cover all units");
    }
}

std::uint64_t slice_weight_bytes(const EgruLayerParams& p, const UnitRange& range) {
    const std::uint64_t k = range.size();
    std::uint64_t bytes = 0;
    // Input-matrix row slices: k rows each.
    for (const CsrMatrix* m : {&p.w_u_x, &p.w_r_x, &p.w_z_x}) {
        const std::uint64_t nz = nnz_in_rows(*m, range.begin, range.end);
        bytes += 4 * (2 * nz + k + 1);
    }
    // Recurrent-transpose column slices: all n_units source rows kept.
    for (const CsrMatrix* m : {&p.w_u_y, &p.w_r_y, &p.w_z_y}) {
        const std::uint64_t nz = nnz_in_cols(*m, range.begin, range.end);
        bytes += 4 * (2 * nz + p.n_units + 1);
    }
    return bytes;
}

std::uint64_t slice_variable_bytes(const EgruLayerParams& p, const UnitRange& range,
                                   const PeBudget& budget) {
    const std::uint64_t k = range.size();
    std::uint64_t bytes = 0;
    bytes += 4 * 4 * k; // b_u, b_r, b_z, theta slices
    bytes += 4 * 5 * k; // c, u, r, z, c_pre
    bytes += 8 * k;     // outgoing fragment, worst case every unit fires
    // Assembled incoming events, budgeted at the configured activity level.
    const auto buffered =
        static_cast<std::uint64_t>(budget.recurrent_buffer_fraction * p.n_units);
    bytes += 8 * buffered;
    return bytes;
}

PartitionPlan plan_partition(std::uint32_t n_units, std::uint32_t n_pes,
                             const EgruLayerParams& params, const PeBudget& budget,
                             std::uint32_t layer_id) {
    if (n_pes < 1) {
        throw DimensionError("plan_partition needs at least one PE");
    }
    require_dim(n_units, params.n_units, "plan_partition n_units");
    budget.check_invariants();

    PartitionPlan plan;
    plan.layer_id = layer_id;
    plan.n_units = n_units;
    plan.n_pes = n_pes;

    const std::uint32_t block = (n_units + n_pes - 1) / n_pes; // ceil; 0 when n_units == 0
    std::uint32_t cursor = 0;
    for (std::uint32_t pe = 0; pe < n_pes; ++pe) {
        const std::uint32_t end = std::min<std::uint32_t>(n_units, cursor + block);
        const UnitRange range{cursor, end};
        plan.ranges.push_back(range);
        const std::uint64_t weights = slice_weight_bytes(params, range);
        const std::uint64_t total = weights + slice_variable_bytes(params, range, budget);
        plan.weight_footprints.push_back(weights);
        plan.footprints.push_back(total);
        if (total > budget.data_available) {
            throw BudgetExceeded(pe, total, budget.data_available);
        }
        cursor = end;
    }
    return plan;
}

std::vector<std::uint32_t> allocate_pe_groups(const std::vector<std::uint32_t>& unit_counts,
                                              std::uint32_t total_pes) {
    const std::size_t n = unit_counts.size();
    if (total_pes < n) {
        throw DimensionError("fewer PEs than layers");
    }
    const std::uint64_t total_units =
        std::accumulate(unit_counts.begin(), unit_counts.end(), std::uint64_t{0});
    std::vector<std::uint32_t> groups(n, 1);
    std::vector<double> remainders(n, 0.0);
    std::uint32_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double share = total_units == 0
                                 ? static_cast<double>(total_pes) / static_cast<double>(n)
                                 : static_cast<double>(unit_counts[i]) * total_pes /
                                       static_cast<double>(total_units);
        groups[i] = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(share));
        remainders[i] = share - static_cast<double>(groups[i]);
        assigned += groups[i];
    }
    // Largest remainder for the leftovers; trim the biggest groups if the
    // minimum-one rule overshot.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainders[a] != remainders[b] ? remainders[a] > remainders[b] : a < b;
    });
    std::size_t next = 0;
    while (assigned < total_pes) {
        groups[order[next % n]] += 1;
        ++assigned;
        ++next;
    }
    while (assigned > total_pes) {
        const auto it = std::max_element(groups.begin(), groups.end());
        if (*it <= 1) {
            break;
        }
        *it -= 1;
        --assigned;
    }
    return groups;
}

std::vector<PartitionPlan> plan_model(const std::vector<EgruLayerParams>& layers,
                                      std::uint32_t total_pes, const PeBudget& budget) {
    if (layers.empty()) {
        throw DimensionError("plan_model: empty layer stack");
    }
    std::vector<PartitionPlan> plans;

    if (total_pes < layers.size()) {
        // Layers stacked onto one shared group: footprints add up per PE.
        std::vector<std::uint64_t> combined(total_pes, 0);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            PeBudget unchecked = budget;
            unchecked.data_available = UINT32_MAX;
            unchecked.sram_total = UINT32_MAX;
            unchecked.instruction_reserved = 0;
            PartitionPlan plan = plan_partition(layers[l].n_units, total_pes, layers[l],
                                                unchecked, static_cast<std::uint32_t>(l));
            for (std::uint32_t pe = 0; pe < total_pes; ++pe) {
                combined[pe] += plan.footprints[pe];
            }
            plans.push_back(std::move(plan));
        }
        for (std::uint32_t pe = 0; pe < total_pes; ++pe) {
            if (combined[pe] > budget.data_available) {
                throw BudgetExceeded(pe, combined[pe], budget.data_available);
            }
        }
        return plans;
    }

    std::vector<std::uint32_t> unit_counts;
    unit_counts.reserve(layers.size());
    for (const EgruLayerParams& l : layers) {
        unit_counts.push_back(l.n_units);
    }
    const std::vector<std::uint32_t> groups = allocate_pe_groups(unit_counts, total_pes);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        plans.push_back(plan_partition(layers[l].n_units, groups[l], layers[l], budget,
                                       static_cast<std::uint32_t>(l)));
    }
    return plans;
}

} // namespace egru
