#pragma once

#include <stdexcept>
#include <string>

namespace tdsim {

enum class ErrorCode {
    SingularMatrix,
    SyntaxError,
    ReferenceError,
    DuplicateId,
    InvalidModel,
    NoLumpedLoad,
    TemplateInvalid,
    UnknownSource,
    NotBoundaryModel,
    NotRadial,
    NoConvergence,
    VoltageCollapse,
    SingularJacobian,
    NotConverged,
    InfeasibleInit,
    UnknownTarget,
    InvalidTransition,
    NonFiniteState,
    DegenerateInput,
    UnknownProbe,
    Io,
};

const char* to_string(ErrorCode code);

// Every failure the library reports. `subject` names the offending element,
// circuit, machine or line number when there is one.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string subject = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }

private:
    ErrorCode code_;
    std::string subject_;
};

}  // namespace tdsim
