#pragma once

#include <stdexcept>
#include <string>

namespace salab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidKernel : Error { using Error::Error; };
struct InvalidDistribution : Error { using Error::Error; };
struct NotClosed : Error { using Error::Error; };
struct NotIrreducible : Error { using Error::Error; };
struct ClassTooLarge : Error { using Error::Error; };
struct WeightMismatch : Error { using Error::Error; };
struct NonFiniteInput : Error { using Error::Error; };
struct UnresolvableLabel : Error { using Error::Error; };
struct StateOutOfRange : Error { using Error::Error; };
struct NonFiniteDrift : Error { using Error::Error; };
struct InvalidSchedule : Error { using Error::Error; };
struct OutOfDomain : Error { using Error::Error; };
struct ClassStructureChanged : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct UnknownFamily : Error { using Error::Error; };
struct UnknownPreset : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

} // namespace salab
