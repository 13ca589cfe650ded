#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace ruinsim {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
};

/// Globally adaptive Gauss-Kronrod (10/21) over [a, b]; b may be +infinity.
/// Throws QuadratureError when the error estimate misses both tolerances.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& options = {});

/// Same, split at the given sorted breakpoints (endpoints included).
double integrate_piecewise(const std::function<double(double)>& f,
                           std::span<const double> breakpoints,
                           const QuadratureOptions& options = {});

}  // namespace ruinsim
