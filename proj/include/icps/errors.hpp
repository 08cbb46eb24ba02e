#ifndef ICPS_ERRORS_HPP
#define ICPS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace icps {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleCorrelation : Error { using Error::Error; };
struct MissingRealizedTypes : Error { using Error::Error; };
struct SizeCapExceeded : Error { using Error::Error; };
struct NoSortKey : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct NonIrStart : Error { using Error::Error; };
struct EmptyStableSet : Error { using Error::Error; };
struct NoDistinctTypes : Error { using Error::Error; };

}  // namespace icps

#endif  // ICPS_ERRORS_HPP
