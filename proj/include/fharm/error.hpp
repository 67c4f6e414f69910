#pragma once

#include <stdexcept>
#include <string>

namespace fharm {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// argument outside the declared domain of an operation
struct DomainError : Error { using Error::Error; };
// tabulated integrand queried outside its samples
struct ExtrapolationError : Error { using Error::Error; };
// tail integral does not converge
struct IntegrabilityError : Error { using Error::Error; };
// operation needs state that has not been established (e.g. uncalibrated A)
struct StateError : Error { using Error::Error; };
// radius below the grid resolution floor
struct ResolutionError : Error { using Error::Error; };
// query outside the sampled range of a profile
struct RangeError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct DimensionError : FormatError { using FormatError::FormatError; };
struct StallError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct InternalError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace fharm
