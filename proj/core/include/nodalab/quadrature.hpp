#pragma once

#include <vector>

namespace nodalab {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre on [a, b].
Rule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);
// Generalized Gauss-Laguerre for the weight u^alpha e^{-u} on (0, inf).
Rule1D gauss_laguerre(int n, double alpha);
// Gauss-Hermite for the standard normal law (weights sum to 1).
Rule1D gauss_hermite_normal(int n);

}  // namespace nodalab
