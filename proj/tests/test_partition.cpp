// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "egru/partition.hpp"
#include "egru/synth.hpp"
#include "helpers.hpp"

using namespace egru;

TEST_CASE("ceiling-division block sizes") {
    std::mt19937_64 rng(41);
    const EgruLayerParams p = helpers::random_layer(rng, 4, 10, 0.0);
    const PartitionPlan plan = plan_partition(10, 3, p, PeBudget{});
    plan.check_invariants();
    REQUIRE(plan.ranges.size() == 3);
    CHECK(plan.ranges[0].size() == 4);
    CHECK(plan.ranges[1].size() == 4);
    CHECK(plan.ranges[2].size() == 2);
}

TEST_CASE("1350 units over 150 PEs gives 9 per PE") {
    // Shape-only check; footprints unconstrained here.
    std::mt19937_64 rng(42);
    const EgruLayerParams p = helpers::random_layer(rng, 8, 1350, 0.99);
    const PartitionPlan plan = plan_partition(1350, 150, p, PeBudget{});
    for (const UnitRange& r : plan.ranges) {
        CHECK(r.size() == 9);
    }
}

TEST_CASE("more PEs than units leaves trailing PEs empty") {
    std::mt19937_64 rng(43);
    const EgruLayerParams p = helpers::random_layer(rng, 3, 5, 0.0);
    const PartitionPlan plan = plan_partition(5, 8, p, PeBudget{});
    plan.check_invariants();
    std::uint32_t covered = 0;
    for (const UnitRange& r : plan.ranges) {
        covered += r.size();
    }
    CHECK(covered == 5);
}

TEST_CASE("footprints equal materialized slice storage") {
    std::mt19937_64 rng(44);
    const EgruLayerParams p = helpers::random_layer(rng, 12, 20, 0.6);
    const PeBudget budget{};
    const PartitionPlan plan = plan_partition(20, 4, p, budget);
    for (std::uint32_t pe = 0; pe < plan.n_pes; ++pe) {
        const UnitRange r = plan.ranges[pe];
        std::uint64_t expect = 0;
        expect += csr_storage_bytes(slice_rows(p.w_u_x, r.begin, r.end));
        expect += csr_storage_bytes(slice_rows(p.w_r_x, r.begin, r.end));
        expect += csr_storage_bytes(slice_rows(p.w_z_x, r.begin, r.end));
        expect += csr_storage_bytes(slice_cols(p.w_u_y, r.begin, r.end));
        expect += csr_storage_bytes(slice_cols(p.w_r_y, r.begin, r.end));
        expect += csr_storage_bytes(slice_cols(p.w_z_y, r.begin, r.end));
        CHECK(plan.weight_footprints[pe] == expect);
        CHECK(plan.footprints[pe] == expect + slice_variable_bytes(p, r, budget));
        CHECK(plan.footprints[pe] <= budget.data_available);
    }
}

TEST_CASE("budget violations raise BudgetExceeded with context") {
    std::mt19937_64 rng(45);
    const EgruLayerParams p = helpers::random_layer(rng, 64, 128, 0.0);
    PeBudget tiny;
    tiny.data_available = 1024;
    tiny.instruction_reserved = 0;
    tiny.sram_total = 2048;
    try {
        plan_partition(128, 2, p, tiny);
        FAIL("expected BudgetExceeded");
    } catch (const BudgetExceeded& e) {
        CHECK(e.pe == 0);
        CHECK(e.needed > e.available);
        CHECK(e.available == 1024);
    }
}

TEST_CASE("proportional group allocation") {
    CHECK(allocate_pe_groups({1350, 1350, 750}, 150) ==
          std::vector<std::uint32_t>{59, 59, 32});
    CHECK(allocate_pe_groups({10, 10}, 4) == std::vector<std::uint32_t>{2, 2});
    // Minimum one PE per layer even for tiny layers.
    const auto g = allocate_pe_groups({1000, 1}, 5);
    CHECK(g[0] + g[1] == 5);
    CHECK(g[1] >= 1);
    CHECK_THROWS_AS(allocate_pe_groups({5, 5, 5}, 2), DimensionError);
}

TEST_CASE("paper LM config fits 150 PEs and overflows one PE") {
    synth::SynthOptions opts;
    opts.sparsity = 0.95;
    const lm::LanguageModel model = synth::random_lm(7, 64, 750, {1350, 1350, 750}, opts);
    const PeBudget budget{};

    const std::vector<PartitionPlan> plans = plan_model(model.layers, 150, budget);
    REQUIRE(plans.size() == 3);
    CHECK(plans[0].n_pes == 59);
    CHECK(plans[1].n_pes == 59);
    CHECK(plans[2].n_pes == 32);
    for (const PartitionPlan& plan : plans) {
        for (std::uint64_t f : plan.footprints) {
            CHECK(f <= budget.data_available);
        }
    }
    // The 1350-unit layers' weight slices sit at the Table-scale reference
    // point of roughly 88 KB per PE.
    const std::uint64_t max_weights = *std::max_element(
        plans[1].weight_footprints.begin(), plans[1].weight_footprints.end());
    CHECK(static_cast<double>(max_weights) > 0.8 * 88.3 * 1024);
    CHECK(static_cast<double>(max_weights) < 1.2 * 88.3 * 1024);

    CHECK_THROWS_AS(plan_model(model.layers, 1, budget), BudgetExceeded);
}

TEST_CASE("tiny model fits a single PE") {
    std::mt19937_64 rng(46);
    std::vector<EgruLayerParams> layers{helpers::random_layer(rng, 8, 16, 0.0)};
    const std::vector<PartitionPlan> plans = plan_model(layers, 1, PeBudget{});
    CHECK(plans.size() == 1);
    CHECK(plans[0].n_pes == 1);
    CHECK(plans[0].ranges[0].size() == 16);
}

TEST_CASE("PeBudget invariants") {
    PeBudget bad;
    bad.instruction_reserved = 65536;
    bad.data_available = 98304;
    CHECK_THROWS_AS(bad.check_invariants(), DimensionError);
    PeBudget ok;
    ok.check_invariants();
}
