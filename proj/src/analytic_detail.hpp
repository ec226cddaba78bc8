#pragma once

#include <algorithm>
#include <functional>

namespace trean::analytic::detail {

struct ScalarRoot {
  double p = 0.0;
  int iterations = 0;
  bool used_bisection = false;
};

/// Root of p - rhs(p) on (0, 1).
ScalarRoot solve_scalar(const std::function<double(double)>& rhs, double tol, const char* what);

}  // namespace trean::analytic::detail
