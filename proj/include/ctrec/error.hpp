/*
 * Copyright 2026 The ctrec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctrec {

enum class ErrorCode {
    InvalidArgument,
    EmptyHierarchy,
    ZeroRow,
    NonDivisor,
    DimensionOverflow,
    ShapeMismatch,
    InsufficientResiduals,
    DegenerateVariance,
    SingularCovariance,
    SingularSystem,
    NotConverged,
    ZeroMeanActuals,
    ZeroReference,
    DegenerateTable,
    InsufficientHistory,
    SchemaError,
    MissingCell,
    BadPartition,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for failures caused by the numbers rather than by the inputs' shape or
/// syntax (singular systems, degenerate variances, non-convergence).
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace ctrec
