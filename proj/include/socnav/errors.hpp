#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace socnav {

/// Root of every error thrown by the library. `path` is a JSON-pointer style
/// location when the failure is tied to a document field, empty otherwise.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message, std::string path = {})
        : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

#define SOCNAV_DEFINE_ERROR(Name)          \
    class Name : public Error {            \
    public:                                \
        using Error::Error;                \
    }

SOCNAV_DEFINE_ERROR(SingleStateAgent);
SOCNAV_DEFINE_ERROR(OutOfRange);
SOCNAV_DEFINE_ERROR(SyntaxError);
SOCNAV_DEFINE_ERROR(SchemaError);
SOCNAV_DEFINE_ERROR(InvariantError);
SOCNAV_DEFINE_ERROR(NoRobot);
SOCNAV_DEFINE_ERROR(MissingGoal);
SOCNAV_DEFINE_ERROR(TooFewStates);
SOCNAV_DEFINE_ERROR(UnknownCard);
SOCNAV_DEFINE_ERROR(UnknownScenario);
SOCNAV_DEFINE_ERROR(EmptyCorpus);

#undef SOCNAV_DEFINE_ERROR

class MalformedRow : public Error {
public:
    MalformedRow(std::size_t row, const std::string& message)
        : Error("row " + std::to_string(row) + ": " + message), row_(row) {}

    /// 1-based line number in the imported text.
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

enum class Severity { error, warning };

struct ValidationIssue {
    Severity severity = Severity::error;
    std::string path;
    std::string message;

    friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

}  // namespace socnav
