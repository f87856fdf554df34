// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Stage-level cost accounting. The simulator counts operations, bytes and
// packets per stage; a CostModel converts counts into modeled time and
// energy. Rates are calibration inputs: the defaults price event-driven
// recurrent MACs well above streamed input MACs (scattered read-modify-
// write against SRAM, no MAC accelerator) and NoC packets cheap, which is
// what makes the recurrent matmul dominate the modeled profile of a
// high-sparsity model.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace egru::profile {

enum class Stage : std::uint8_t {
    input_matmul = 0,
    recurrent_matmul,
    pointwise,
    broadcast,
    offchip_read,
    host_io,
};

inline constexpr std::size_t kStageCount = 6;

const char* stage_name(Stage s);

struct Counter {
    std::uint64_t mac_count = 0;
    std::uint64_t bytes_read = 0;
    std::uint64_t bytes_written = 0;
    std::uint64_t packet_count = 0;

    Counter& operator+=(const Counter& o) {
        mac_count += o.mac_count;
        bytes_read += o.bytes_read;
        bytes_written += o.bytes_written;
        packet_count += o.packet_count;
        return *this;
    }
};

struct StageCounters {
    std::array<Counter, kStageCount> stages{};

    Counter& at(Stage s) { return stages[static_cast<std::size_t>(s)]; }
    const Counter& at(Stage s) const { return stages[static_cast<std::size_t>(s)]; }

    StageCounters& operator+=(const StageCounters& o) {
        for (std::size_t i = 0; i < kStageCount; ++i) {
            stages[i] += o.stages[i];
        }
        return *this;
    }
};

struct StageRates {
    double seconds_per_mac = 0.0;
    double seconds_per_byte = 0.0;
    double seconds_per_packet = 0.0;
};

struct CostModel {
    std::array<StageRates, kStageCount> rates{};
    double static_power_w = 0.39;
    double timer_hz = 1e6; // 1 MHz tick

    StageRates& at(Stage s) { return rates[static_cast<std::size_t>(s)]; }
    const StageRates& at(Stage s) const { return rates[static_cast<std::size_t>(s)]; }

    static CostModel defaults();
};

struct ProfileReport {
    std::array<double, kStageCount> stage_seconds{};
    std::array<std::uint64_t, kStageCount> stage_ticks{};
    double total_seconds = 0.0;
    std::uint64_t total_ticks = 0;
    double power_w = 0.0;
    double energy_j = 0.0;
    std::uint64_t batch_size = 1;
    double per_item_seconds = 0.0;
    double per_item_energy_j = 0.0;
    /// Optional externally measured energy, shown alongside the modeled
    /// power * time product when the two disagree.
    std::optional<double> measured_energy_j;
    bool sub_resolution_note = false; // some nonzero stage was under 10 ticks
};

/// joules = watts * seconds.
double energy_joules(double power_w, double seconds);

/// Whole timer ticks elapsed for a duration: floor(t * hz).
std::uint64_t quantize_to_timer(double seconds, double timer_hz = 1e6);

ProfileReport build_report(const StageCounters& counters, const CostModel& model,
                           std::uint64_t batch_size);

/// Report built from externally measured wall time and power (comparison
/// rows); normalization and energy arithmetic as in build_report.
ProfileReport external_report(double power_w, double total_seconds, std::uint64_t batch_size,
                              std::optional<double> measured_energy_j = std::nullopt);

/// Stable line-oriented text form; schema documented in docs/formats.md.
std::string report_to_text(const ProfileReport& report);

/// Counter table in the same text style, for --report output.
std::string counters_to_text(const StageCounters& counters);

} // namespace egru::profile
