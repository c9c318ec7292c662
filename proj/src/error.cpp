#include "ctrank/error.hpp"

namespace ctrank {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MalformedXml: return "MalformedXml";
        case ErrorKind::MissingId: return "MissingId";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::DuplicateTopicId: return "DuplicateTopicId";
        case ErrorKind::VocabTooSmall: return "VocabTooSmall";
        case ErrorKind::DimMismatch: return "DimMismatch";
        case ErrorKind::RemoteUnavailable: return "RemoteUnavailable";
        case ErrorKind::MalformedResponse: return "MalformedResponse";
        case ErrorKind::MalformedRunLine: return "MalformedRunLine";
        case ErrorKind::DuplicateDoc: return "DuplicateDoc";
        case ErrorKind::MalformedQrelLine: return "MalformedQrelLine";
        case ErrorKind::DuplicateJudgment: return "DuplicateJudgment";
        case ErrorKind::GradeOutOfRange: return "GradeOutOfRange";
        case ErrorKind::NoOverlap: return "NoOverlap";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::ConfigMismatch: return "ConfigMismatch";
    }
    return "Unknown";
}

namespace {

std::string format_message(ErrorKind kind, const std::string& message, std::optional<std::size_t> line) {
    std::string out(to_string(kind));
    if (line) {
        out += " (line " + std::to_string(*line) + ")";
    }
    out += ": ";
    out += message;
    return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(format_message(kind, message, line)), kind_(kind), detail_(message), line_(line) {}

}  // namespace ctrank
