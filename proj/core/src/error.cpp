#include "tdsim/error.hpp"

#include <utility>

namespace tdsim {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::ReferenceError: return "ReferenceError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::NoLumpedLoad: return "NoLumpedLoad";
    case ErrorCode::TemplateInvalid: return "TemplateInvalid";
    case ErrorCode::UnknownSource: return "UnknownSource";
    case ErrorCode::NotBoundaryModel: return "NotBoundaryModel";
    case ErrorCode::NotRadial: return "NotRadial";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::VoltageCollapse: return "VoltageCollapse";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::InfeasibleInit: return "InfeasibleInit";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::UnknownProbe: return "UnknownProbe";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string subject)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      subject_(std::move(subject)) {}

}  // namespace tdsim
