#pragma once

#include <stdexcept>
#include <string>

namespace netforge {

// Base of every error raised by the library. Subclasses name the failure
// category; the CLI maps all of them to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define NETFORGE_ERROR(Name)              \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  };

NETFORGE_ERROR(ShapeError)
NETFORGE_ERROR(GeometryError)
NETFORGE_ERROR(StateError)
NETFORGE_ERROR(InputError)
NETFORGE_ERROR(CorruptionError)
NETFORGE_ERROR(ConstructionError)
NETFORGE_ERROR(PlanError)
NETFORGE_ERROR(PreconditionError)
NETFORGE_ERROR(FormatError)
NETFORGE_ERROR(CompatibilityError)

#undef NETFORGE_ERROR

}  // namespace netforge
