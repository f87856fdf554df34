// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#include "egru/synth.hpp"

#include <cmath>

#include "egru/model_io.hpp"
#include "egru/rng.hpp"

namespace egru::synth {

namespace {

DenseMatrix random_dense(std::mt19937_64& rng, std::uint32_t rows, std::uint32_t cols,
                         float scale) {
    DenseMatrix m(rows, cols);
    for (float& v : m.values) {
        v = uniform_float(rng, -scale, scale);
    }
    return m;
}

CsrMatrix random_csr(std::mt19937_64& rng, std::uint32_t rows, std::uint32_t cols, float scale,
                     double sparsity) {
    DenseMatrix dense = random_dense(rng, rows, cols, scale);
    if (sparsity > 0.0) {
        dense = magnitude_prune(dense, sparsity);
    }
    return csr_from_dense(dense, 0.0f);
}

} // namespace

EgruLayerParams random_layer(std::mt19937_64& rng, std::uint32_t n_in, std::uint32_t n_units,
                             const SynthOptions& opts) {
    const float in_scale =
        opts.weight_scale > 0.0f ? opts.weight_scale : 1.0f / std::sqrt(static_cast<float>(n_in));
    const float rec_scale = opts.weight_scale > 0.0f
                                ? opts.weight_scale
                                : 1.0f / std::sqrt(static_cast<float>(n_units));

    EgruLayerParams p;
    p.n_in = n_in;
    p.n_units = n_units;
    p.w_u_x = random_csr(rng, n_units, n_in, in_scale, opts.sparsity);
    p.w_r_x = random_csr(rng, n_units, n_in, in_scale, opts.sparsity);
    p.w_z_x = random_csr(rng, n_units, n_in, in_scale, opts.sparsity);
    p.w_u_y = random_csr(rng, n_units, n_units, rec_scale, opts.sparsity);
    p.w_r_y = random_csr(rng, n_units, n_units, rec_scale, opts.sparsity);
    p.w_z_y = random_csr(rng, n_units, n_units, rec_scale, opts.sparsity);
    p.b_u.resize(n_units);
    p.b_r.resize(n_units);
    p.b_z.resize(n_units);
    for (std::uint32_t i = 0; i < n_units; ++i) {
        p.b_u[i] = uniform_float(rng, -0.1f, 0.1f);
        p.b_r[i] = uniform_float(rng, -0.1f, 0.1f);
        p.b_z[i] = uniform_float(rng, -0.1f, 0.1f);
    }
    p.theta.assign(n_units, opts.theta);
    p.lambda_sg = opts.lambda_sg;
    p.epsilon_sg = opts.epsilon_sg;
    return p;
}

lm::LanguageModel random_lm(std::uint64_t seed, std::uint32_t vocab_size,
                            std::uint32_t embedding_dim,
                            const std::vector<std::uint32_t>& layer_units,
                            const SynthOptions& opts) {
    std::mt19937_64 rng(seed);
    lm::LanguageModel m;
    std::uint32_t in_dim = embedding_dim;
    for (std::uint32_t units : layer_units) {
        m.layers.push_back(random_layer(rng, in_dim, units, opts));
        in_dim = units;
    }
    m.embeddings.vocab_size = vocab_size;
    m.embeddings.dim = embedding_dim;
    m.embeddings.vectors.resize(static_cast<std::size_t>(vocab_size) * embedding_dim);
    for (float& v : m.embeddings.vectors) {
        v = uniform_float(rng, -1.0f, 1.0f);
    }
    m.vocab.reserve(vocab_size);
    m.vocab.emplace_back(io::kUnknownToken);
    for (std::uint32_t i = 1; i < vocab_size; ++i) {
        m.vocab.push_back("w" + std::to_string(i));
    }
    m.check_invariants();
    return m;
}

dvs::GestureClassifier random_dvs(std::uint64_t seed, std::uint32_t feature_dim,
                                  const std::vector<std::uint32_t>& layer_units,
                                  std::uint32_t n_classes, const SynthOptions& opts) {
    std::mt19937_64 rng(seed);
    dvs::GestureClassifier m;
    std::uint32_t in_dim = feature_dim;
    for (std::uint32_t units : layer_units) {
        m.layers.push_back(random_layer(rng, in_dim, units, opts));
        in_dim = units;
    }
    m.readout = random_dense(rng, n_classes, in_dim, 1.0f / std::sqrt(static_cast<float>(in_dim)));
    m.readout_bias.resize(n_classes);
    for (float& v : m.readout_bias) {
        v = uniform_float(rng, -0.1f, 0.1f);
    }
    m.check_invariants();
    return m;
}

std::vector<LayerSpec> paper_lm_shape() {
    return {{750, 1350}, {1350, 1350}, {1350, 750}};
}

} // namespace egru::synth
