// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#include "egru/lm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "egru/rng.hpp"
#include "egru/simulator.hpp"

namespace egru::lm {

void LanguageModel::check_invariants() const {
    if (layers.empty()) {
        throw DimensionError("language model has no layers");
    }
    for (const EgruLayerParams& l : layers) {
        l.check_invariants();
    }
    require_dim(layers.front().n_in, embeddings.dim, "first layer input dim");
    require_dim(layers.back().n_units, embeddings.dim, "tied readout dim");
    require_dim(embeddings.vectors.size(),
                static_cast<std::size_t>(embeddings.vocab_size) * embeddings.dim,
                "embedding table");
    require_dim(vocab.size(), embeddings.vocab_size, "vocabulary");
    for (std::size_t l = 1; l < layers.size(); ++l) {
        require_dim(layers[l].n_in, layers[l - 1].n_units, "layer chain");
    }
}

DenseVector embed(std::uint32_t token, const EmbeddingTable& table) {
    if (token >= table.vocab_size) {
        throw DimensionError("token id " + std::to_string(token) + " out of range");
    }
    const float* row = table.row(token);
    return DenseVector(row, row + table.dim);
}

DenseVector readout_logits(const DenseVector& h, const EmbeddingTable& table) {
    require_dim(h.size(), table.dim, "readout input");
    DenseVector logits(table.vocab_size, 0.0f);
    for (std::uint32_t w = 0; w < table.vocab_size; ++w) {
        const float* row = table.row(w);
        float acc = 0.0f;
        for (std::uint32_t j = 0; j < table.dim; ++j) {
            acc += h[j] * row[j];
        }
        logits[w] = acc;
    }
    return logits;
}

std::vector<double> softmax(const DenseVector& logits) {
    std::vector<double> probs(logits.size());
    double max_logit = -std::numeric_limits<double>::infinity();
    for (float l : logits) {
        max_logit = std::max(max_logit, static_cast<double>(l));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(static_cast<double>(logits[i]) - max_logit);
        sum += probs[i];
    }
    for (double& p : probs) {
        p /= sum;
    }
    return probs;
}

void ppl_update(PerplexityAccumulator& acc, const std::vector<double>& probs,
                std::uint32_t target) {
    if (target >= probs.size()) {
        throw DimensionError("ppl_update: target out of range");
    }
    const double p = probs[target];
    if (p <= 0.0) {
        acc.infinite_count += 1;
    } else {
        acc.total_log_loss += -std::log(p);
    }
    acc.token_count += 1;
}

double ppl_value(const PerplexityAccumulator& acc) {
    if (acc.token_count == 0) {
        throw std::logic_error("perplexity undefined for zero tokens");
    }
    if (acc.infinite_count > 0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::exp(acc.total_log_loss / static_cast<double>(acc.token_count));
}

EvalResult evaluate_lm(const LanguageModel& model,
                       const std::vector<std::vector<std::uint32_t>>& chunks,
                       const EvalOptions& opts) {
    model.check_invariants();
    if (chunks.empty()) {
        throw DimensionError("evaluate_lm: empty token stream");
    }

    sim::Machine machine(model.layers, plan_model(model.layers, opts.total_pes, opts.budget));
    std::vector<EgruState> states = fresh_states(model.layers);

    EvalResult result;
    PerplexityAccumulator acc;
    std::vector<std::uint64_t> layer_events(model.layers.size(), 0);
    std::uint64_t total_steps = 0;

    for (std::size_t c = 0; c < chunks.size(); ++c) {
        const std::vector<std::uint32_t>& chunk = chunks[c];
        if (chunk.empty()) {
            continue;
        }
        if (opts.reset_state_per_chunk) {
            states = fresh_states(model.layers);
        }
        std::vector<DenseVector> inputs;
        inputs.reserve(chunk.size());
        for (std::uint32_t tok : chunk) {
            inputs.push_back(embed(tok, model.embeddings));
        }
        sim::RunResult run = machine.run(inputs, &states);
        // Host feeds each chunk and collects its outputs.
        run.counters.at(profile::Stage::host_io).packet_count += 2;
        result.counters += run.counters;
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            layer_events[l] += run.layer_event_count[l];
        }
        total_steps += chunk.size();

        for (std::size_t i = 0; i < chunk.size(); ++i) {
            // Target is the next token in the flattened stream, if any.
            std::uint32_t target;
            if (i + 1 < chunk.size()) {
                target = chunk[i + 1];
            } else if (c + 1 < chunks.size() && !chunks[c + 1].empty()) {
                target = chunks[c + 1].front();
            } else {
                break;
            }
            const DenseVector h = densify(run.outputs[i]);
            const std::vector<double> probs = softmax(readout_logits(h, model.embeddings));
            ppl_update(acc, probs, target);
        }
    }

    result.ppl = ppl_value(acc);
    result.tokens = acc.token_count;
    result.layer_activity_sparsity.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const double denom = static_cast<double>(model.layers[l].n_units) *
                             static_cast<double>(total_steps);
        result.layer_activity_sparsity[l] =
            denom == 0.0 ? 1.0 : 1.0 - static_cast<double>(layer_events[l]) / denom;
    }
    return result;
}

namespace {

std::uint32_t argmax_index(const std::vector<double>& v) {
    std::uint32_t best = 0;
    for (std::uint32_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

std::uint32_t sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
    const double u = uniform_unit(rng);
    double cum = 0.0;
    std::uint32_t last_nonzero = 0;
    for (std::uint32_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) {
            last_nonzero = i;
        }
        cum += probs[i];
        if (u < cum) {
            return i;
        }
    }
    return last_nonzero; // rounding left cum slightly below 1
}

} // namespace

std::vector<std::uint32_t> generate(const LanguageModel& model,
                                    const std::vector<std::uint32_t>& prompt,
                                    std::uint32_t length, double temperature,
                                    std::uint64_t seed) {
    model.check_invariants();
    if (temperature <= 0.0) {
        throw std::invalid_argument("temperature must be positive");
    }
    if (prompt.empty()) {
        throw std::invalid_argument("empty prompt and no start token configured");
    }

    std::vector<EgruState> states = fresh_states(model.layers);
    EventVector last;
    for (std::uint32_t tok : prompt) {
        last = step_stack(model.layers, states, embed(tok, model.embeddings));
    }

    const bool greedy = temperature < 1e-6;
    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> out;
    out.reserve(length);
    for (std::uint32_t i = 0; i < length; ++i) {
        DenseVector logits = readout_logits(densify(last), model.embeddings);
        if (!greedy) {
            for (float& l : logits) {
                l = static_cast<float>(static_cast<double>(l) / temperature);
            }
        }
        const std::vector<double> probs = softmax(logits);
        const std::uint32_t tok = greedy ? argmax_index(probs) : sample_index(probs, rng);
        out.push_back(tok);
        last = step_stack(model.layers, states, embed(tok, model.embeddings));
    }
    return out;
}

} // namespace egru::lm
