#pragma once

namespace silfdtd {

/// A fitted or derived quantity with its 1-sigma uncertainty.
struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

}  // namespace silfdtd
