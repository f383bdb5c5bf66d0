#include "fgk/errors.hpp"

namespace fgk {

const char* errc_name(Errc c)
{
    switch (c) {
    case Errc::EmptyFlow: return "EmptyFlow";
    case Errc::MalformedEvent: return "MalformedEvent";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::InsufficientGroup: return "InsufficientGroup";
    case Errc::EmptySeries: return "EmptySeries";
    case Errc::ChunkTooShort: return "ChunkTooShort";
    case Errc::FrameDimMismatch: return "FrameDimMismatch";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::BadDimension: return "BadDimension";
    case Errc::ZeroBandwidth: return "ZeroBandwidth";
    case Errc::SubspaceTooLarge: return "SubspaceTooLarge";
    case Errc::NumericalFailure: return "NumericalFailure";
    case Errc::FlowTooShort: return "FlowTooShort";
    case Errc::EmptySpace: return "EmptySpace";
    case Errc::NoViableCandidate: return "NoViableCandidate";
    case Errc::UndefinedError: return "UndefinedError";
    case Errc::BadTemplate: return "BadTemplate";
    case Errc::BadConfig: return "BadConfig";
    case Errc::MissingModel: return "MissingModel";
    }
    return "Unknown";
}

Error::Error(Errc c, const std::string& what)
    : std::runtime_error(std::string(errc_name(c)) + ": " + what), code_(c)
{
}

} // namespace fgk
