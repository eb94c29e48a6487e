#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wow {

/// Base for every error raised by the library. `kind()` is the stable,
/// machine-readable error name written into CLI error records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define WOW_DEFINE_ERROR(Name)                                                  \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& message) : Error(#Name, message) {}    \
    }

WOW_DEFINE_ERROR(GenerationFailed);
WOW_DEFINE_ERROR(NotApplicable);
WOW_DEFINE_ERROR(SchemaError);
WOW_DEFINE_ERROR(GatewayError);
WOW_DEFINE_ERROR(ScoreParseError);
WOW_DEFINE_ERROR(BatchDiscarded);
WOW_DEFINE_ERROR(ProxyError);
WOW_DEFINE_ERROR(ScorerUnavailable);
WOW_DEFINE_ERROR(ConsistencyUnavailable);
WOW_DEFINE_ERROR(LogitsUnavailable);
WOW_DEFINE_ERROR(RatioUnsatisfiable);
WOW_DEFINE_ERROR(InsufficientPairs);
WOW_DEFINE_ERROR(EmptyInput);
WOW_DEFINE_ERROR(MetricError);
WOW_DEFINE_ERROR(TrainingDiverged);
WOW_DEFINE_ERROR(ConfigError);

#undef WOW_DEFINE_ERROR

class IngestError : public Error {
public:
    IngestError(std::size_t line, const std::string& reason)
        : Error("IngestError", "line " + std::to_string(line) + ": " + reason),
          line_(line), reason_(reason) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

class StageDependencyError : public Error {
public:
    explicit StageDependencyError(const std::string& path)
        : Error("StageDependencyError", "missing upstream artifact: " + path), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace wow
