#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "nlcs/common.hpp"

namespace nlcs {

/// Symmetric entrywise mixing function sigma: R^2 -> R used by the tensor
/// map. Mean, maximum and minimum satisfy sigma(a, a) = a.
enum class Mixing {
  arithmetic_mean,
  maximum,
  minimum,
  geometric_mean_abs,
  harmonic,
};

inline constexpr std::array<Mixing, 5> kAllMixings = {
    Mixing::arithmetic_mean, Mixing::maximum, Mixing::minimum,
    Mixing::geometric_mean_abs, Mixing::harmonic};

inline std::string_view to_string(Mixing m) {
  switch (m) {
    case Mixing::arithmetic_mean: return "mean";
    case Mixing::maximum: return "max";
    case Mixing::minimum: return "min";
    case Mixing::geometric_mean_abs: return "geomean";
    case Mixing::harmonic: return "harmonic";
  }
  return "mean";
}

inline Mixing parse_mixing(std::string_view name) {
  for (Mixing m : kAllMixings)
    if (to_string(m) == name) return m;
  if (name == "arithmetic-mean" || name == "arithmetic_mean") return Mixing::arithmetic_mean;
  if (name == "maximum") return Mixing::maximum;
  if (name == "minimum") return Mixing::minimum;
  if (name == "geometric-mean" || name == "geometric_mean") return Mixing::geometric_mean_abs;
  throw Error("unknown mixing function '" + std::string(name) +
              "' (expected mean, max, min, geomean or harmonic)");
}

// Evaluates sigma(a, b). Inputs where sigma is undefined (harmonic with
// a + b = 0) return 0 and set *undefined.
inline double mix(Mixing m, double a, double b, bool* undefined = nullptr) {
  switch (m) {
    case Mixing::arithmetic_mean:
      return 0.5 * (a + b);
    case Mixing::maximum:
      return std::max(a, b);
    case Mixing::minimum:
      return std::min(a, b);
    case Mixing::geometric_mean_abs:
      return std::sqrt(std::abs(a) * std::abs(b));
    case Mixing::harmonic: {
      const double s = a + b;
      if (s == 0.0) {
        if (undefined) *undefined = true;
        return 0.0;
      }
      return 2.0 * (a * b) / s;
    }
  }
  return 0.0;
}

}  // namespace nlcs
