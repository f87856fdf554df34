// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "egru/cell.hpp"
#include "egru/rng.hpp"
#include "egru/sparse.hpp"
#include "egru/synth.hpp"

namespace helpers {

inline egru::DenseMatrix random_matrix(std::mt19937_64& rng, std::uint32_t rows,
                                       std::uint32_t cols, double zero_fraction = 0.0,
                                       float scale = 1.0f) {
    egru::DenseMatrix m(rows, cols);
    for (float& v : m.values) {
        if (egru::uniform_unit(rng) < zero_fraction) {
            v = 0.0f;
        } else {
            v = egru::uniform_float(rng, -scale, scale);
            if (v == 0.0f) {
                v = scale * 0.5f;
            }
        }
    }
    return m;
}

inline egru::DenseVector random_vector(std::mt19937_64& rng, std::uint32_t n,
                                       float scale = 1.0f) {
    egru::DenseVector v(n);
    for (float& x : v) {
        x = egru::uniform_float(rng, -scale, scale);
    }
    return v;
}

inline egru::EventVector random_events(std::mt19937_64& rng, std::uint32_t dim,
                                       double active_fraction) {
    egru::EventVector out;
    out.dim = dim;
    for (std::uint32_t i = 0; i < dim; ++i) {
        if (egru::uniform_unit(rng) < active_fraction) {
            float v = egru::uniform_float(rng, -1.0f, 1.0f);
            if (v == 0.0f) {
                v = 0.25f;
            }
            out.events.push_back({i, v});
        }
    }
    return out;
}

inline egru::EgruLayerParams random_layer(std::mt19937_64& rng, std::uint32_t n_in,
                                          std::uint32_t n_units, double sparsity,
                                          float theta = 0.3f) {
    egru::synth::SynthOptions opts;
    opts.sparsity = sparsity;
    opts.theta = theta;
    return egru::synth::random_layer(rng, n_in, n_units, opts);
}

} // namespace helpers
