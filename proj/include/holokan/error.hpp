#pragma once

#include <stdexcept>
#include <string>

namespace holokan {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HOLOKAN_DEFINE_ERROR(Name)        \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

HOLOKAN_DEFINE_ERROR(SingularInput);
HOLOKAN_DEFINE_ERROR(NonFinite);
HOLOKAN_DEFINE_ERROR(Diverged);
HOLOKAN_DEFINE_ERROR(DegenerateRange);
HOLOKAN_DEFINE_ERROR(DegenerateFit);
HOLOKAN_DEFINE_ERROR(DegenerateVariance);
HOLOKAN_DEFINE_ERROR(ResolutionMismatch);
HOLOKAN_DEFINE_ERROR(ArchitectureMismatch);
HOLOKAN_DEFINE_ERROR(CheckpointError);
HOLOKAN_DEFINE_ERROR(ConfigError);

#undef HOLOKAN_DEFINE_ERROR

}  // namespace holokan
