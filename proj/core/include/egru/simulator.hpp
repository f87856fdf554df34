// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Functional many-core simulator with stage-level cost accounting. Per
// timestep and layer, each PE:
//   1) projects the streamed input onto its row slice and computes its
//      units' gates from the previous step's assembled events,
//   2) broadcasts reset-gated events (the candidate consumes r .* y, and
//      r_s lives on the PE owning unit s),
//   3) computes candidate, state update and local emission, and
//   4) broadcasts its output fragment.
// Fragments meet at a per-timestep barrier; concatenation in PE-rank order
// yields globally sorted events because unit ranges are contiguous. PEs are
// executed sequentially in rank order, which the determinism contract makes
// indistinguishable from any parallel schedule.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "egru/cell.hpp"
#include "egru/partition.hpp"
#include "egru/profile.hpp"

namespace egru::sim {

/// Per-source-PE fragment slots for one timestep. A step may complete only
/// once every source has deposited (the barrier).
class Mailbox {
  public:
    explicit Mailbox(std::uint32_t n_sources) : slots_(n_sources) {}

    void deposit(std::uint32_t source_pe, EventVector fragment);
    bool complete() const;
    /// All fragments in rank order; resets the mailbox. Throws if a slot is
    /// still empty.
    std::vector<EventVector> take();

  private:
    std::vector<std::optional<EventVector>> slots_;
};

/// Concatenate per-PE fragments in rank order. Each fragment must carry
/// global indices inside its PE's range, so the result is sorted with no
/// sort step.
EventVector broadcast_and_assemble(const std::vector<EventVector>& fragments,
                                   const PartitionPlan& plan);

enum class Phase : std::uint8_t { compute, deposit, assemble };

struct LogEntry {
    std::uint32_t step;
    std::uint32_t layer;
    std::uint32_t pe; // source PE; n_pes for layer-wide assembles
    Phase phase;
};

struct RunOptions {
    bool record_log = false;
};

struct RunResult {
    std::vector<EventVector> outputs;           // final layer, one per step
    profile::StageCounters counters;
    std::vector<double> layer_activity_sparsity; // mean over steps, per layer
    std::vector<std::uint64_t> layer_event_count; // total events, per layer
    std::vector<LogEntry> log;                  // only when record_log
};

/// MACs the event-driven recurrent kernel performs for one incoming event
/// vector: the summed NZ of every active unit's outgoing rows, over all
/// three gate matrices.
std::uint64_t count_recurrent_macs(const PartitionPlan& plan, const EgruLayerParams& params,
                                   const EventVector& y);

/// A planned model instance with materialized per-PE weight slices. Build
/// once, run many sequences; counters accumulate per run.
class Machine {
  public:
    Machine(const std::vector<EgruLayerParams>& layers, std::vector<PartitionPlan> plans);

    /// Run a timestep sequence. When states is null the run starts fresh
    /// and the final state is discarded; otherwise it is carried in/out.
    RunResult run(const std::vector<DenseVector>& inputs,
                  std::vector<EgruState>* states = nullptr, const RunOptions& opts = {});

    const std::vector<PartitionPlan>& plans() const { return plans_; }

  private:
    struct PeSlice {
        UnitRange range;
        CsrMatrix wux, wrx, wzx; // input rows
        CsrMatrix wuy, wry, wzy; // recurrent-transpose columns
        DenseVector b_u, b_r, b_z, theta;
        // per-step scratch carried between the gate and candidate passes
        DenseVector wx_z, u, r;
    };
    struct LayerGroup {
        std::vector<PeSlice> pes;
    };

    const std::vector<EgruLayerParams>& layers_;
    std::vector<PartitionPlan> plans_;
    std::vector<LayerGroup> groups_;
};

/// One-shot convenience wrapper around Machine.
RunResult run_sequence(const std::vector<EgruLayerParams>& layers,
                       const std::vector<PartitionPlan>& plans,
                       const std::vector<DenseVector>& inputs,
                       std::vector<EgruState>* states = nullptr,
                       const RunOptions& opts = {});

} // namespace egru::sim
