#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctrank {

enum class ErrorKind {
    MalformedXml,
    MissingId,
    Io,
    EmptyCorpus,
    DuplicateTopicId,
    VocabTooSmall,
    DimMismatch,
    RemoteUnavailable,
    MalformedResponse,
    MalformedRunLine,
    DuplicateDoc,
    MalformedQrelLine,
    DuplicateJudgment,
    GradeOutOfRange,
    NoOverlap,
    InvalidConfig,
    ConfigMismatch,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for every failure the library reports. The kind is
/// what callers branch on; `line()` is set for errors tied to a line of an
/// input file (run files, qrels).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line = std::nullopt);

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<std::size_t> line() const noexcept { return line_; }
    /// Message without the kind and line prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
    std::optional<std::size_t> line_;
};

}  // namespace ctrank
