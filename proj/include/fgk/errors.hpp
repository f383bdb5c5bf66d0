#pragma once

#include <stdexcept>
#include <string>

namespace fgk {

enum class Errc {
    EmptyFlow,
    MalformedEvent,
    IoError,
    ParseError,
    InsufficientGroup,
    EmptySeries,
    ChunkTooShort,
    FrameDimMismatch,
    InsufficientData,
    BadDimension,
    ZeroBandwidth,
    SubspaceTooLarge,
    NumericalFailure,
    FlowTooShort,
    EmptySpace,
    NoViableCandidate,
    UndefinedError,
    BadTemplate,
    BadConfig,
    MissingModel,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc c, const std::string& what);
    Errc code() const { return code_; }

private:
    Errc code_;
};

} // namespace fgk
