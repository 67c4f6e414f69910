#pragma once

#include <functional>

namespace fharm {

using Fn = std::function<double(double)>;

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

// Adaptive Gauss-Kronrod (7/15) on [a, b].
QuadResult integrate(const Fn& f, double a, double b, double abs_tol = 1e-13,
                     double rel_tol = 1e-11, int max_depth = 40);

// Integral of f over [a, inf) for f with power-law decay. Works in log t,
// extends the upper limit geometrically and stops once the extrapolated tail
// (fitted from the local decay rate) is below rel_tol * |integral| + abs_tol.
// Throws IntegrabilityError when the decay is not integrable.
QuadResult integrate_power_tail(const Fn& f, double a, double rel_tol = 1e-10,
                                double abs_tol = 1e-300);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int m, double* nodes, double* weights);

}  // namespace fharm
