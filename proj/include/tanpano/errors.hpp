#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tanpano {

enum class ErrorCode {
    Hemisphere,
    Domain,
    Dimension,
    Coverage,
    Layout,
    Range,
    InsufficientSamples,
    EmptyInput,
    Count,
    Format,
    Checksum,
    Io,
    BackendUnavailable,
    Key,
};

constexpr std::string_view error_name(ErrorCode code)
{
    switch (code) {
        case ErrorCode::Hemisphere: return "HemisphereError";
        case ErrorCode::Domain: return "DomainError";
        case ErrorCode::Dimension: return "DimensionError";
        case ErrorCode::Coverage: return "CoverageError";
        case ErrorCode::Layout: return "LayoutError";
        case ErrorCode::Range: return "RangeError";
        case ErrorCode::InsufficientSamples: return "InsufficientSamples";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::Count: return "CountError";
        case ErrorCode::Format: return "FormatError";
        case ErrorCode::Checksum: return "ChecksumError";
        case ErrorCode::Io: return "IoError";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::Key: return "KeyError";
    }
    return "Error";
}

/// Base of every error raised by the toolkit. The message is prefixed with
/// the error name so CLI output stays greppable.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(error_name(code)) + ": " + msg), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

template <ErrorCode Code>
class CodedError : public Error
{
public:
    explicit CodedError(const std::string& msg) : Error(Code, msg) {}
};

using HemisphereError = CodedError<ErrorCode::Hemisphere>;
using DomainError = CodedError<ErrorCode::Domain>;
using DimensionError = CodedError<ErrorCode::Dimension>;
using LayoutError = CodedError<ErrorCode::Layout>;
using RangeError = CodedError<ErrorCode::Range>;
using InsufficientSamples = CodedError<ErrorCode::InsufficientSamples>;
using EmptyInput = CodedError<ErrorCode::EmptyInput>;
using CountError = CodedError<ErrorCode::Count>;
using ChecksumError = CodedError<ErrorCode::Checksum>;
using IoError = CodedError<ErrorCode::Io>;
using BackendUnavailable = CodedError<ErrorCode::BackendUnavailable>;
using KeyError = CodedError<ErrorCode::Key>;

class CoverageError : public Error
{
public:
    explicit CoverageError(std::size_t uncovered)
        : Error(ErrorCode::Coverage, std::to_string(uncovered) + " output pixels are not covered by any plane"),
          uncovered_(uncovered)
    {}

    std::size_t uncovered() const noexcept { return uncovered_; }

private:
    std::size_t uncovered_;
};

class FormatError : public Error
{
public:
    FormatError(const std::string& msg, std::size_t offset)
        : Error(ErrorCode::Format, msg + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset)
    {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace tanpano
