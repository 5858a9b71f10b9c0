#pragma once

#include <type_traits>

namespace photospin {

/// Plain double value of a scalar that may be an Eigen::AutoDiffScalar.
template <typename Scalar>
double value_of(const Scalar& x) {
  if constexpr (std::is_arithmetic_v<Scalar>) {
    return static_cast<double>(x);
  } else {
    return value_of(x.value());
  }
}

}  // namespace photospin
