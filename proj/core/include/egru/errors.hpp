// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace egru {

/// Shape or length disagreement between operands.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed file: bad magic, unsupported version, unparsable header.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Blob integrity failure (truncation or CRC mismatch).
struct ChecksumError : FormatError {
    explicit ChecksumError(const std::string& what) : FormatError(what) {}
};

/// A processing element cannot hold its assigned slice of the model.
struct BudgetExceeded : std::runtime_error {
    std::uint32_t pe;
    std::uint64_t needed;
    std::uint64_t available;

    BudgetExceeded(std::uint32_t pe_, std::uint64_t needed_, std::uint64_t available_)
        : std::runtime_error("PE " + std::to_string(pe_) + " needs " + std::to_string(needed_) +
                             " bytes but only " + std::to_string(available_) + " are available"),
          pe(pe_), needed(needed_), available(available_) {}
};

} // namespace egru
