// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0
//
// DVS gesture path: raw events binned into two-channel count frames,
// maxpool downscaling, and EGRU classification over precomputed CNN
// features with a linear readout.

#pragma once

#include <cstdint>
#include <vector>

#include "egru/cell.hpp"
#include "egru/partition.hpp"
#include "egru/profile.hpp"

namespace egru::io {
struct DvsEventRecord;
}

namespace egru::dvs {

/// Event-count frames, one per time window, two polarity channels.
struct FrameTensor {
    std::uint32_t n_frames = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    static constexpr std::uint32_t kChannels = 2;
    std::vector<std::uint32_t> counts; // [frame][polarity][y][x]

    std::uint32_t& at(std::uint32_t f, std::uint32_t p, std::uint32_t y, std::uint32_t x) {
        return counts[((static_cast<std::size_t>(f) * kChannels + p) * height + y) * width + x];
    }
    std::uint32_t at(std::uint32_t f, std::uint32_t p, std::uint32_t y, std::uint32_t x) const {
        return counts[((static_cast<std::size_t>(f) * kChannels + p) * height + y) * width + x];
    }
};

inline constexpr std::uint64_t kDefaultWindowUs = 25000; // 25 ms bins

/// Bin raw events into frames over half-open windows
/// [k*window, (k+1)*window). Frame count is floor(t_max/window) + 1.
FrameTensor bin_events(const std::vector<io::DvsEventRecord>& events,
                       std::uint64_t window_us = kDefaultWindowUs,
                       std::uint32_t sensor_size = 128);

/// Per-channel block max over factor x factor blocks.
FrameTensor maxpool_frames(const FrameTensor& frames, std::uint32_t factor = 4);

/// Gesture classifier: EGRU stack over CNN features plus a dense linear
/// readout.
struct GestureClassifier {
    std::vector<EgruLayerParams> layers;
    DenseMatrix readout;     // n_classes x final layer units
    DenseVector readout_bias; // n_classes

    std::uint32_t n_classes() const { return readout.n_rows; }
    std::uint32_t feature_dim() const { return layers.empty() ? 0 : layers.front().n_in; }

    void check_invariants() const;
};

enum class Aggregate : std::uint8_t { last, mean };

struct ClassifyResult {
    DenseVector logits;
    std::uint32_t label = 0;
};

/// Run the stack over the feature sequence and read out the aggregated
/// final-layer output. Argmax breaks ties toward the lowest index.
ClassifyResult classify(const std::vector<DenseVector>& features,
                        const GestureClassifier& model, Aggregate aggregate = Aggregate::last);

struct DvsItem {
    std::vector<DenseVector> features;
    std::uint32_t label = 0;
};

struct DvsEvalOptions {
    std::uint32_t total_pes = 1;
    PeBudget budget{};
    Aggregate aggregate = Aggregate::last;
};

struct DvsEvalResult {
    double accuracy = 0.0;
    std::uint64_t items = 0;
    std::vector<std::uint32_t> predictions;
    profile::StageCounters counters;
};

/// Evaluate a labeled dataset; items run sequentially, grouped into
/// batches of batch_size for host-interaction accounting only.
DvsEvalResult evaluate_dvs(const GestureClassifier& model, const std::vector<DvsItem>& dataset,
                           std::uint32_t batch_size, const DvsEvalOptions& opts = {});

} // namespace egru::dvs
