#pragma once

#include <stdexcept>
#include <string>

namespace nct {

struct NctError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define NCT_ERROR(Name)                          \
  struct Name : NctError {                       \
    explicit Name(const std::string& what)       \
        : NctError(std::string(#Name) + ": " + what) {} \
  }

NCT_ERROR(NonSelfAdjointInput);
NCT_ERROR(SeriesDivergence);
NCT_ERROR(BandExceedsWindow);
NCT_ERROR(NotHermitian);
NCT_ERROR(STNotHermitian);
NCT_ERROR(PolishDiverged);
NCT_ERROR(NonIntegral);
NCT_ERROR(Indeterminate);
NCT_ERROR(PairingNotCertified);
NCT_ERROR(ConfigError);
NCT_ERROR(InvariantViolation);

#undef NCT_ERROR

}  // namespace nct
