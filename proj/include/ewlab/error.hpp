#pragma once

#include <stdexcept>
#include <string>

namespace ewlab {

/// Base of every error the library raises. Each subclass names one failure
/// mode so callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define EWLAB_DEFINE_ERROR(Name)         \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

EWLAB_DEFINE_ERROR(InvalidBase);
EWLAB_DEFINE_ERROR(DigitOutOfRange);
EWLAB_DEFINE_ERROR(NoTailMeta);
EWLAB_DEFINE_ERROR(ResourceLimit);
EWLAB_DEFINE_ERROR(PointOutOfRange);
EWLAB_DEFINE_ERROR(RangeTooSmall);
EWLAB_DEFINE_ERROR(NonIntegrable);
EWLAB_DEFINE_ERROR(MissingDensityBound);
EWLAB_DEFINE_ERROR(NotStochastic);
EWLAB_DEFINE_ERROR(NotPrimitive);
EWLAB_DEFINE_ERROR(AlphabetMismatch);
EWLAB_DEFINE_ERROR(UnknownPreset);
EWLAB_DEFINE_ERROR(ConfigError);

#undef EWLAB_DEFINE_ERROR

}  // namespace ewlab
