#pragma once

#include <stdexcept>
#include <string>

namespace xft {

// Base class for everything thrown by the library.
struct XftError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : XftError {
    using XftError::XftError;
};
struct NumericalError : XftError {
    using XftError::XftError;
};
struct RangeError : XftError {
    using XftError::XftError;
};
struct IndexError : XftError {
    using XftError::XftError;
};
struct IncompatibleSpectraError : XftError {
    using XftError::XftError;
};
struct MarginalError : XftError {
    using XftError::XftError;
};
struct InvalidSymmetryError : XftError {
    using XftError::XftError;
};
struct NonUnitaryError : XftError {
    using XftError::XftError;
};
struct GenerationError : XftError {
    using XftError::XftError;
};
struct UndefinedError : XftError {
    using XftError::XftError;
};
struct NotProductStateError : XftError {
    using XftError::XftError;
};
struct MismatchedRunsError : XftError {
    using XftError::XftError;
};
struct ParseError : XftError {
    using XftError::XftError;
};
struct ValidationError : XftError {
    using XftError::XftError;
};

} // namespace xft
