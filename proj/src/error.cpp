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

#include "ctrec/error.hpp"

namespace ctrec {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptyHierarchy: return "EmptyHierarchy";
        case ErrorCode::ZeroRow: return "ZeroRow";
        case ErrorCode::NonDivisor: return "NonDivisor";
        case ErrorCode::DimensionOverflow: return "DimensionOverflow";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::InsufficientResiduals: return "InsufficientResiduals";
        case ErrorCode::DegenerateVariance: return "DegenerateVariance";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::ZeroMeanActuals: return "ZeroMeanActuals";
        case ErrorCode::ZeroReference: return "ZeroReference";
        case ErrorCode::DegenerateTable: return "DegenerateTable";
        case ErrorCode::InsufficientHistory: return "InsufficientHistory";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::MissingCell: return "MissingCell";
        case ErrorCode::BadPartition: return "BadPartition";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DegenerateVariance:
        case ErrorCode::SingularCovariance:
        case ErrorCode::SingularSystem:
        case ErrorCode::NotConverged:
        case ErrorCode::ZeroMeanActuals:
        case ErrorCode::ZeroReference:
        case ErrorCode::DegenerateTable:
            return true;
        default:
            return false;
    }
}

}  // namespace ctrec
