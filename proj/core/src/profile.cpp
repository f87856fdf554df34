// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#include "egru/profile.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace egru::profile {

const char* stage_name(Stage s) {
    switch (s) {
    case Stage::input_matmul: return "input_matmul";
    case Stage::recurrent_matmul: return "recurrent_matmul";
    case Stage::pointwise: return "pointwise";
    case Stage::broadcast: return "broadcast";
    case Stage::offchip_read: return "offchip_read";
    case Stage::host_io: return "host_io";
    }
    return "unknown";
}

CostModel CostModel::defaults() {
    CostModel m;
    m.at(Stage::input_matmul).seconds_per_mac = 2e-9;      // streamed CSR rows
    m.at(Stage::recurrent_matmul).seconds_per_mac = 3e-8;  // scattered accumulate
    m.at(Stage::pointwise).seconds_per_mac = 8e-9;         // transcendental-heavy
    m.at(Stage::broadcast).seconds_per_packet = 2e-9;      // NoC packets are cheap
    m.at(Stage::offchip_read).seconds_per_byte = 1e-9;
    m.at(Stage::host_io).seconds_per_byte = 1e-8;
    m.at(Stage::host_io).seconds_per_packet = 5e-4;        // host round-trip latency
    return m;
}

double energy_joules(double power_w, double seconds) {
    return power_w * seconds;
}

std::uint64_t quantize_to_timer(double seconds, double timer_hz) {
    return static_cast<std::uint64_t>(seconds * timer_hz);
}

ProfileReport build_report(const StageCounters& counters, const CostModel& model,
                           std::uint64_t batch_size) {
    ProfileReport report;
    report.batch_size = batch_size == 0 ? 1 : batch_size;
    for (std::size_t i = 0; i < kStageCount; ++i) {
        const Counter& c = counters.stages[i];
        const StageRates& r = model.rates[i];
        const double t = static_cast<double>(c.mac_count) * r.seconds_per_mac +
                         static_cast<double>(c.bytes_read + c.bytes_written) * r.seconds_per_byte +
                         static_cast<double>(c.packet_count) * r.seconds_per_packet;
        report.stage_seconds[i] = t;
        report.stage_ticks[i] = quantize_to_timer(t, model.timer_hz);
        report.total_seconds += t;
        if (t > 0.0 && report.stage_ticks[i] < 10) {
            report.sub_resolution_note = true;
        }
    }
    report.total_ticks = quantize_to_timer(report.total_seconds, model.timer_hz);
    report.power_w = model.static_power_w;
    report.energy_j = energy_joules(report.power_w, report.total_seconds);
    report.per_item_seconds = report.total_seconds / static_cast<double>(report.batch_size);
    report.per_item_energy_j = report.energy_j / static_cast<double>(report.batch_size);
    return report;
}

ProfileReport external_report(double power_w, double total_seconds, std::uint64_t batch_size,
                              std::optional<double> measured_energy_j) {
    ProfileReport report;
    report.batch_size = batch_size == 0 ? 1 : batch_size;
    report.total_seconds = total_seconds;
    report.total_ticks = quantize_to_timer(total_seconds);
    report.power_w = power_w;
    report.energy_j = energy_joules(power_w, total_seconds);
    report.per_item_seconds = total_seconds / static_cast<double>(report.batch_size);
    report.per_item_energy_j = report.energy_j / static_cast<double>(report.batch_size);
    report.measured_energy_j = measured_energy_j;
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

std::string report_to_text(const ProfileReport& report) {
    std::ostringstream out;
    out << "egrusim-profile v1\n";
    for (std::size_t i = 0; i < kStageCount; ++i) {
        out << "stage " << stage_name(static_cast<Stage>(i)) << " seconds "
            << fmt(report.stage_seconds[i]) << " ticks " << report.stage_ticks[i] << "\n";
    }
    out << "total_seconds " << fmt(report.total_seconds) << "\n";
    out << "total_ticks " << report.total_ticks << "\n";
    out << "power_w " << fmt(report.power_w) << "\n";
    out << "energy_j " << fmt(report.energy_j) << "\n";
    if (report.measured_energy_j.has_value()) {
        out << "measured_energy_j " << fmt(*report.measured_energy_j) << "\n";
    }
    out << "batch_size " << report.batch_size << "\n";
    out << "per_item_seconds " << fmt(report.per_item_seconds) << "\n";
    out << "per_item_energy_j " << fmt(report.per_item_energy_j) << "\n";
    if (report.sub_resolution_note) {
        out << "note stage-below-10-ticks\n";
    }
    return out.str();
}

std::string counters_to_text(const StageCounters& counters) {
    std::ostringstream out;
    for (std::size_t i = 0; i < kStageCount; ++i) {
        const Counter& c = counters.stages[i];
        out << "counters " << stage_name(static_cast<Stage>(i)) << " macs " << c.mac_count
            << " bytes_read " << c.bytes_read << " bytes_written " << c.bytes_written
            << " packets " << c.packet_count << "\n";
    }
    return out.str();
}

} // namespace egru::profile
