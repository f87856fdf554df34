// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#include "egru/dvs.hpp"

#include <algorithm>

#include "egru/model_io.hpp"
#include "egru/simulator.hpp"

namespace egru::dvs {

FrameTensor bin_events(const std::vector<io::DvsEventRecord>& events, std::uint64_t window_us,
                       std::uint32_t sensor_size) {
    FrameTensor frames;
    frames.height = sensor_size;
    frames.width = sensor_size;
    if (events.empty()) {
        return frames;
    }
    std::uint64_t t_max = 0;
    for (const io::DvsEventRecord& e : events) {
        t_max = std::max(t_max, e.timestamp_us);
    }
    frames.n_frames = static_cast<std::uint32_t>(t_max / window_us) + 1;
    frames.counts.assign(static_cast<std::size_t>(frames.n_frames) * FrameTensor::kChannels *
                             sensor_size * sensor_size,
                         0u);
    for (const io::DvsEventRecord& e : events) {
        if (e.x >= sensor_size || e.y >= sensor_size) {
            throw DimensionError("event coordinate out of range");
        }
        if (e.polarity > 1) {
            throw DimensionError("event polarity out of range");
        }
        const auto f = static_cast<std::uint32_t>(e.timestamp_us / window_us);
        frames.at(f, e.polarity, e.y, e.x) += 1;
    }
    return frames;
}

FrameTensor maxpool_frames(const FrameTensor& frames, std::uint32_t factor) {
    if (factor == 0 || frames.height % factor != 0 || frames.width % factor != 0) {
        throw DimensionError("frame resolution not divisible by pool factor");
    }
    FrameTensor out;
    out.n_frames = frames.n_frames;
    out.height = frames.height / factor;
    out.width = frames.width / factor;
    out.counts.assign(static_cast<std::size_t>(out.n_frames) * FrameTensor::kChannels *
                          out.height * out.width,
                      0u);
    for (std::uint32_t f = 0; f < frames.n_frames; ++f) {
        for (std::uint32_t p = 0; p < FrameTensor::kChannels; ++p) {
            for (std::uint32_t y = 0; y < out.height; ++y) {
                for (std::uint32_t x = 0; x < out.width; ++x) {
                    std::uint32_t best = 0;
                    for (std::uint32_t dy = 0; dy < factor; ++dy) {
                        for (std::uint32_t dx = 0; dx < factor; ++dx) {
                            best = std::max(best,
                                            frames.at(f, p, y * factor + dy, x * factor + dx));
                        }
                    }
                    out.at(f, p, y, x) = best;
                }
            }
        }
    }
    return out;
}

void GestureClassifier::check_invariants() const {
    if (layers.empty()) {
        throw DimensionError("classifier has no layers");
    }
    for (const EgruLayerParams& l : layers) {
        l.check_invariants();
    }
    for (std::size_t l = 1; l < layers.size(); ++l) {
        require_dim(layers[l].n_in, layers[l - 1].n_units, "layer chain");
    }
    require_dim(readout.n_cols, layers.back().n_units, "readout width");
    require_dim(readout_bias.size(), readout.n_rows, "readout bias");
}

namespace {

DenseVector aggregate_outputs(const std::vector<EventVector>& outputs, std::uint32_t n_units,
                              Aggregate mode) {
    if (mode == Aggregate::last) {
        return densify(outputs.back());
    }
    std::vector<double> sum(n_units, 0.0);
    for (const EventVector& y : outputs) {
        for (const Event& e : y.events) {
            sum[e.index] += static_cast<double>(e.value);
        }
    }
    DenseVector mean(n_units);
    for (std::uint32_t i = 0; i < n_units; ++i) {
        mean[i] = static_cast<float>(sum[i] / static_cast<double>(outputs.size()));
    }
    return mean;
}

DenseVector dense_readout(const DenseMatrix& w, const DenseVector& bias, const DenseVector& h) {
    require_dim(h.size(), w.n_cols, "readout input");
    DenseVector logits(w.n_rows);
    for (std::uint32_t c = 0; c < w.n_rows; ++c) {
        float acc = 0.0f;
        for (std::uint32_t j = 0; j < w.n_cols; ++j) {
            acc += w.at(c, j) * h[j];
        }
        logits[c] = acc + bias[c];
    }
    return logits;
}

std::uint32_t argmax_lowest(const DenseVector& v) {
    std::uint32_t best = 0;
    for (std::uint32_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

} // namespace

ClassifyResult classify(const std::vector<DenseVector>& features, const GestureClassifier& model,
                        Aggregate aggregate) {
    model.check_invariants();
    if (features.empty()) {
        throw DimensionError("classify: empty feature sequence");
    }
    std::vector<EgruState> states = fresh_states(model.layers);
    std::vector<EventVector> outputs;
    outputs.reserve(features.size());
    for (const DenseVector& x : features) {
        outputs.push_back(step_stack(model.layers, states, x));
    }
    const DenseVector h = aggregate_outputs(outputs, model.layers.back().n_units, aggregate);
    ClassifyResult result;
    result.logits = dense_readout(model.readout, model.readout_bias, h);
    result.label = argmax_lowest(result.logits);
    return result;
}

DvsEvalResult evaluate_dvs(const GestureClassifier& model, const std::vector<DvsItem>& dataset,
                           std::uint32_t batch_size, const DvsEvalOptions& opts) {
    model.check_invariants();
    if (dataset.empty()) {
        throw DimensionError("evaluate_dvs: empty dataset");
    }
    if (batch_size == 0) {
        batch_size = 1;
    }

    sim::Machine machine(model.layers, plan_model(model.layers, opts.total_pes, opts.budget));

    DvsEvalResult result;
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const DvsItem& item = dataset[i];
        if (item.features.empty()) {
            throw DimensionError("evaluate_dvs: item " + std::to_string(i) +
                                 " has no features");
        }
        if (i % batch_size == 0) {
            // One host round-trip per batch of items.
            result.counters.at(profile::Stage::host_io).packet_count += 2;
        }
        std::vector<EgruState> states = fresh_states(model.layers);
        sim::RunResult run = machine.run(item.features, &states);
        result.counters += run.counters;

        const DenseVector h =
            aggregate_outputs(run.outputs, model.layers.back().n_units, opts.aggregate);
        const DenseVector logits = dense_readout(model.readout, model.readout_bias, h);
        const std::uint32_t predicted = argmax_lowest(logits);
        result.predictions.push_back(predicted);
        if (predicted == item.label) {
            ++correct;
        }
    }
    result.items = dataset.size();
    result.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
    return result;
}

} // namespace egru::dvs
