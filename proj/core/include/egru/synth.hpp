// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded random model synthesis. Weight matrices are drawn dense, magnitude
// pruned to the target sparsity and stored CSR, so synthetic models exercise
// the same construction path as converted ones.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "egru/dvs.hpp"
#include "egru/lm.hpp"

namespace egru::synth {

struct LayerSpec {
    std::uint32_t n_in = 0;
    std::uint32_t n_units = 0;
};

struct SynthOptions {
    double sparsity = 0.0;
    float theta = 0.5f;      // broadcast to every unit
    float weight_scale = 0.0f; // 0 = 1/sqrt(fan_in)
    float lambda_sg = 1.0f;
    float epsilon_sg = 1.0f;
};

EgruLayerParams random_layer(std::mt19937_64& rng, std::uint32_t n_in, std::uint32_t n_units,
                             const SynthOptions& opts);

/// LM with the given unit counts per layer; the final layer must match the
/// embedding dim (tied readout). Vocabulary is "<unk>", "w1", "w2", ...
lm::LanguageModel random_lm(std::uint64_t seed, std::uint32_t vocab_size,
                            std::uint32_t embedding_dim,
                            const std::vector<std::uint32_t>& layer_units,
                            const SynthOptions& opts);

dvs::GestureClassifier random_dvs(std::uint64_t seed, std::uint32_t feature_dim,
                                  const std::vector<std::uint32_t>& layer_units,
                                  std::uint32_t n_classes, const SynthOptions& opts);

/// The LM shape used throughout the tests: 750-dim embeddings, unit counts
/// 1350/1350/750, 95% weight sparsity.
std::vector<LayerSpec> paper_lm_shape();

} // namespace egru::synth
