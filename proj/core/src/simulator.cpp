// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#include "egru/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace egru::sim {

using profile::Stage;

void Mailbox::deposit(std::uint32_t source_pe, EventVector fragment) {
    if (source_pe >= slots_.size()) {
        throw DimensionError("mailbox: source PE out of range");
    }
    if (slots_[source_pe].has_value()) {
        throw DimensionError("mailbox: slot already filled this timestep");
    }
    slots_[source_pe] = std::move(fragment);
}

bool Mailbox::complete() const {
    return std::all_of(slots_.begin(), slots_.end(),
                       [](const auto& s) { return s.has_value(); });
}

std::vector<EventVector> Mailbox::take() {
    if (!complete()) {
        throw DimensionError("mailbox: timestep incomplete, missing fragments");
    }
    std::vector<EventVector> out;
    out.reserve(slots_.size());
    for (auto& s : slots_) {
        out.push_back(std::move(*s));
        s.reset();
    }
    return out;
}

EventVector broadcast_and_assemble(const std::vector<EventVector>& fragments,
                                   const PartitionPlan& plan) {
    require_dim(fragments.size(), plan.n_pes, "broadcast fragments");
    EventVector global;
    global.dim = plan.n_units;
    for (std::uint32_t pe = 0; pe < plan.n_pes; ++pe) {
        const UnitRange& range = plan.ranges[pe];
        for (const Event& e : fragments[pe].events) {
            if (!range.contains(e.index)) {
                throw DimensionError("fragment event " + std::to_string(e.index) +
                                     " outside PE " + std::to_string(pe) + " range");
            }
            global.events.push_back(e);
        }
    }
    return global;
}

std::uint64_t count_recurrent_macs(const PartitionPlan& plan, const EgruLayerParams& params,
                                   const EventVector& y) {
    require_dim(y.dim, plan.n_units, "count_recurrent_macs events");
    std::uint64_t macs = 0;
    for (const Event& e : y.events) {
        macs += nnz_in_rows(params.w_u_y, e.index, e.index + 1);
        macs += nnz_in_rows(params.w_r_y, e.index, e.index + 1);
        macs += nnz_in_rows(params.w_z_y, e.index, e.index + 1);
    }
    return macs;
}

Machine::Machine(const std::vector<EgruLayerParams>& layers, std::vector<PartitionPlan> plans)
    : layers_(layers), plans_(std::move(plans)) {
    require_dim(plans_.size(), layers_.size(), "machine plans");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const EgruLayerParams& p = layers_[l];
        const PartitionPlan& plan = plans_[l];
        plan.check_invariants();
        require_dim(plan.n_units, p.n_units, "plan units");
        LayerGroup group;
        for (const UnitRange& range : plan.ranges) {
            PeSlice pe;
            pe.range = range;
            pe.wux = slice_rows(p.w_u_x, range.begin, range.end);
            pe.wrx = slice_rows(p.w_r_x, range.begin, range.end);
            pe.wzx = slice_rows(p.w_z_x, range.begin, range.end);
            pe.wuy = slice_cols(p.w_u_y, range.begin, range.end);
            pe.wry = slice_cols(p.w_r_y, range.begin, range.end);
            pe.wzy = slice_cols(p.w_z_y, range.begin, range.end);
            pe.b_u.assign(p.b_u.begin() + range.begin, p.b_u.begin() + range.end);
            pe.b_r.assign(p.b_r.begin() + range.begin, p.b_r.begin() + range.end);
            pe.b_z.assign(p.b_z.begin() + range.begin, p.b_z.begin() + range.end);
            pe.theta.assign(p.theta.begin() + range.begin, p.theta.begin() + range.end);
            group.pes.push_back(std::move(pe));
        }
        groups_.push_back(std::move(group));
    }
}

RunResult Machine::run(const std::vector<DenseVector>& inputs,
                       std::vector<EgruState>* states, const RunOptions& opts) {
    const std::size_t n_layers = layers_.size();
    std::vector<EgruState> local_states;
    if (states == nullptr) {
        local_states = fresh_states(layers_);
        states = &local_states;
    }
    require_dim(states->size(), n_layers, "machine run states");

    RunResult result;
    result.layer_activity_sparsity.assign(n_layers, 1.0);

    // Per-PE cell state, seeded from the carried global state.
    std::vector<std::vector<DenseVector>> c_local(n_layers);
    std::vector<EventVector> y_prev(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const EgruState& s = (*states)[l];
        require_dim(s.c.size(), layers_[l].n_units, "carried state");
        y_prev[l] = s.y;
        for (const PeSlice& pe : groups_[l].pes) {
            c_local[l].emplace_back(s.c.begin() + pe.range.begin, s.c.begin() + pe.range.end);
        }
    }

    std::vector<std::uint64_t> layer_event_total(n_layers, 0);
    auto& counters = result.counters;
    const auto log = [&](std::uint32_t step, std::uint32_t layer, std::uint32_t pe, Phase ph) {
        if (opts.record_log) {
            result.log.push_back({step, layer, pe, ph});
        }
    };

    for (std::size_t t = 0; t < inputs.size(); ++t) {
        const auto step = static_cast<std::uint32_t>(t);
        require_dim(inputs[t].size(), layers_[0].n_in, "sequence input");
        // Inputs stream in from off-chip memory, one word per element.
        counters.at(Stage::offchip_read).bytes_read += 4 * inputs[t].size();

        DenseVector x = inputs[t];
        for (std::size_t l = 0; l < n_layers; ++l) {
            const PartitionPlan& plan = plans_[l];
            LayerGroup& group = groups_[l];
            const std::uint32_t n_pes = plan.n_pes;
            const std::uint32_t peers = n_pes - 1;
            const std::uint32_t next_group_pes =
                l + 1 < n_layers ? plans_[l + 1].n_pes : 0;

            // Pass 1: input projection, gates, reset-gated fragment.
            Mailbox gated_box(n_pes);
            for (std::uint32_t rank = 0; rank < n_pes; ++rank) {
                PeSlice& pe = group.pes[rank];
                const std::uint32_t k = pe.range.size();
                log(step, static_cast<std::uint32_t>(l), rank, Phase::compute);

                auto& in_ctr = counters.at(Stage::input_matmul);
                std::uint64_t in_macs = 0;
                DenseVector wx_u = dense_matvec(pe.wux, x, &in_macs);
                DenseVector wx_r = dense_matvec(pe.wrx, x, &in_macs);
                pe.wx_z = dense_matvec(pe.wzx, x, &in_macs);
                in_ctr.mac_count += in_macs;
                in_ctr.bytes_read += 12 * in_macs + 4 * (k + 1) * 3;
                in_ctr.bytes_written += 4 * 3 * k;

                auto& rec_ctr = counters.at(Stage::recurrent_matmul);
                std::uint64_t rec_macs = 0;
                DenseVector rh_u = event_matvec(pe.wuy, y_prev[l], &rec_macs);
                DenseVector rh_r = event_matvec(pe.wry, y_prev[l], &rec_macs);
                rec_ctr.mac_count += rec_macs;
                rec_ctr.bytes_read += 12 * rec_macs + 8 * 2 * y_prev[l].count();
                rec_ctr.bytes_written += 4 * rec_macs;

                pe.u.resize(k);
                pe.r.resize(k);
                for (std::uint32_t i = 0; i < k; ++i) {
                    pe.u[i] = sigmoid((wx_u[i] + pe.b_u[i]) + rh_u[i]);
                    pe.r[i] = sigmoid((wx_r[i] + pe.b_r[i]) + rh_r[i]);
                }
                counters.at(Stage::pointwise).mac_count += 6 * k;

                // Gate owned events at the source: (s, r_s * y_s).
                EventVector gated_frag;
                gated_frag.dim = plan.n_units;
                for (const Event& e : y_prev[l].events) {
                    if (!pe.range.contains(e.index)) {
                        continue;
                    }
                    const float v = pe.r[e.index - pe.range.begin] * e.value;
                    counters.at(Stage::pointwise).mac_count += 1;
                    if (v != 0.0f) {
                        gated_frag.events.push_back({e.index, v});
                    }
                }
                auto& bc = counters.at(Stage::broadcast);
                bc.packet_count += gated_frag.count() * peers + peers;
                bc.bytes_written += 8 * gated_frag.count() * peers;
                log(step, static_cast<std::uint32_t>(l), rank, Phase::deposit);
                gated_box.deposit(rank, std::move(gated_frag));
            }
            log(step, static_cast<std::uint32_t>(l), n_pes, Phase::assemble);
            const EventVector gated = broadcast_and_assemble(gated_box.take(), plan);

            // Pass 2: candidate, state update, emission, output fragment.
            Mailbox out_box(n_pes);
            for (std::uint32_t rank = 0; rank < n_pes; ++rank) {
                PeSlice& pe = group.pes[rank];
                const std::uint32_t k = pe.range.size();
                log(step, static_cast<std::uint32_t>(l), rank, Phase::compute);

                auto& rec_ctr = counters.at(Stage::recurrent_matmul);
                std::uint64_t rec_macs = 0;
                DenseVector rh_z = event_matvec(pe.wzy, gated, &rec_macs);
                rec_ctr.mac_count += rec_macs;
                rec_ctr.bytes_read += 12 * rec_macs + 8 * gated.count();
                rec_ctr.bytes_written += 4 * rec_macs;

                DenseVector& c = c_local[l][rank];
                EventVector frag;
                frag.dim = plan.n_units;
                for (std::uint32_t i = 0; i < k; ++i) {
                    const float z = std::tanh((pe.wx_z[i] + rh_z[i]) + pe.b_z[i]);
                    const float c_pre = pe.u[i] * z + (1.0f - pe.u[i]) * c[i];
                    if (c_pre - pe.theta[i] >= 0.0f) {
                        if (c_pre != 0.0f) {
                            frag.events.push_back({pe.range.begin + i, c_pre});
                        }
                        c[i] = c_pre - pe.theta[i];
                    } else {
                        c[i] = c_pre;
                    }
                }
                counters.at(Stage::pointwise).mac_count += 9 * k;

                auto& bc = counters.at(Stage::broadcast);
                bc.packet_count += frag.count() * (peers + next_group_pes) + peers + next_group_pes;
                bc.bytes_written += 8 * frag.count() * (peers + next_group_pes);
                log(step, static_cast<std::uint32_t>(l), rank, Phase::deposit);
                out_box.deposit(rank, std::move(frag));
            }
            log(step, static_cast<std::uint32_t>(l), n_pes, Phase::assemble);
            EventVector y_now = broadcast_and_assemble(out_box.take(), plan);
            layer_event_total[l] += y_now.count();

            if (l + 1 < n_layers) {
                x = densify(y_now);
            } else {
                counters.at(Stage::host_io).bytes_written += 8 * y_now.count();
                result.outputs.push_back(y_now);
            }
            y_prev[l] = std::move(y_now);
        }
    }

    // Write back carried state.
    for (std::size_t l = 0; l < n_layers; ++l) {
        EgruState& s = (*states)[l];
        s.y = y_prev[l];
        std::size_t offset = 0;
        for (std::uint32_t rank = 0; rank < plans_[l].n_pes; ++rank) {
            const DenseVector& c = c_local[l][rank];
            std::copy(c.begin(), c.end(), s.c.begin() + static_cast<std::ptrdiff_t>(offset));
            offset += c.size();
        }
    }

    result.layer_event_count = layer_event_total;
    if (!inputs.empty()) {
        for (std::size_t l = 0; l < n_layers; ++l) {
            const double denom =
                static_cast<double>(layers_[l].n_units) * static_cast<double>(inputs.size());
            result.layer_activity_sparsity[l] =
                denom == 0.0 ? 1.0 : 1.0 - static_cast<double>(layer_event_total[l]) / denom;
        }
    }
    return result;
}

RunResult run_sequence(const std::vector<EgruLayerParams>& layers,
                       const std::vector<PartitionPlan>& plans,
                       const std::vector<DenseVector>& inputs,
                       std::vector<EgruState>* states, const RunOptions& opts) {
    Machine machine(layers, plans);
    return machine.run(inputs, states, opts);
}

} // namespace egru::sim
