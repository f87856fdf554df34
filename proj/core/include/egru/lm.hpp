// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Word-level language modeling on an EGRU stack: embedding lookup, tied
// dot-product readout against the embedding table, softmax, perplexity,
// and sampling-based generation.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egru/cell.hpp"
#include "egru/partition.hpp"
#include "egru/profile.hpp"

namespace egru::lm {

struct EmbeddingTable {
    std::uint32_t vocab_size = 0;
    std::uint32_t dim = 0;
    std::vector<float> vectors; // vocab_size x dim, row-major

    const float* row(std::uint32_t token) const {
        return vectors.data() + static_cast<std::size_t>(token) * dim;
    }
};

/// Language model: EGRU stack plus embedding table. The readout is tied to
/// the embeddings; there is no separate output matrix.
struct LanguageModel {
    std::vector<EgruLayerParams> layers;
    EmbeddingTable embeddings;
    std::vector<std::string> vocab; // one word per id

    void check_invariants() const;
};

/// The token's embedding row.
DenseVector embed(std::uint32_t token, const EmbeddingTable& table);

/// logits[w] = <h, embedding row w> for every word w.
DenseVector readout_logits(const DenseVector& h, const EmbeddingTable& table);

/// Max-subtracted softmax, computed in double.
std::vector<double> softmax(const DenseVector& logits);

/// Natural-log cross entropy accumulated in 64-bit.
struct PerplexityAccumulator {
    double total_log_loss = 0.0;
    std::uint64_t token_count = 0;
    std::uint64_t infinite_count = 0; // targets assigned probability zero
};

void ppl_update(PerplexityAccumulator& acc, const std::vector<double>& probs,
                std::uint32_t target);

/// exp(mean log loss); +inf when any target had probability zero.
double ppl_value(const PerplexityAccumulator& acc);

struct EvalOptions {
    std::uint32_t total_pes = 1;
    PeBudget budget{};
    bool reset_state_per_chunk = false;
};

struct EvalResult {
    double ppl = 0.0;
    std::uint64_t tokens = 0;
    std::vector<double> layer_activity_sparsity;
    profile::StageCounters counters;
};

/// Teacher-forced next-word evaluation over chunks, with state carried
/// across chunk boundaries unless reset_state_per_chunk is set.
EvalResult evaluate_lm(const LanguageModel& model,
                       const std::vector<std::vector<std::uint32_t>>& chunks,
                       const EvalOptions& opts = {});

/// Feed the prompt, then iteratively sample from softmax(logits /
/// temperature) with a seeded deterministic generator. Temperatures below
/// 1e-6 decode greedily (argmax, seed ignored).
std::vector<std::uint32_t> generate(const LanguageModel& model,
                                    const std::vector<std::uint32_t>& prompt,
                                    std::uint32_t length, double temperature,
                                    std::uint64_t seed);

} // namespace egru::lm
