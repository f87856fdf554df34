// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0
//
// File formats: the model container (text header + little-endian binary
// blobs, CRC-checked), token streams, raw DVS event records, and
// precomputed feature sequences. Layouts are normative and documented in
// docs/formats.md.

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "egru/dvs.hpp"
#include "egru/lm.hpp"

namespace egru::io {

using AnyModel = std::variant<lm::LanguageModel, dvs::GestureClassifier>;

/// Serialize to the container format. Deterministic: equal models produce
/// identical bytes.
std::vector<std::uint8_t> save_model(const AnyModel& model);

/// Parse and validate a container. Throws FormatError (bad magic/version/
/// header), ChecksumError (truncation or CRC mismatch) or DimensionError
/// (header/blob disagreement).
AnyModel load_model(const std::vector<std::uint8_t>& bytes);

void save_model_file(const AnyModel& model, const std::string& path);
AnyModel load_model_file(const std::string& path);

/// One DVS camera event. Sensor is 128 x 128; timestamps are microseconds,
/// non-decreasing within a file.
struct DvsEventRecord {
    std::uint64_t timestamp_us;
    std::uint16_t x;
    std::uint16_t y;
    std::uint8_t polarity; // 0 or 1

    friend bool operator==(const DvsEventRecord&, const DvsEventRecord&) = default;
};

inline constexpr std::uint32_t kDvsSensorSize = 128;
inline constexpr std::size_t kDvsRecordBytes = 16;

std::vector<DvsEventRecord> load_dvs_events(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> save_dvs_events(const std::vector<DvsEventRecord>& events);

/// Feature sequences: "EGRF" magic, version, dim, count, then count*dim
/// little-endian floats.
std::vector<DenseVector> load_features(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> save_features(const std::vector<DenseVector>& features);
std::vector<DenseVector> load_features_file(const std::string& path);
void save_features_file(const std::vector<DenseVector>& features, const std::string& path);

/// Whitespace tokenization against a vocabulary; unknown words map to the
/// vocabulary's "<unk>" entry. The id sequence is chunked into segments of
/// chunk_len (the last may be shorter).
std::vector<std::vector<std::uint32_t>> load_tokens(const std::string& text,
                                                    const std::vector<std::string>& vocabulary,
                                                    std::uint32_t chunk_len = 70);

inline constexpr const char* kUnknownToken = "<unk>";

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

} // namespace egru::io
