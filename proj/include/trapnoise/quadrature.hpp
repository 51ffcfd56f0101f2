#ifndef TRAPNOISE_QUADRATURE_HPP
#define TRAPNOISE_QUADRATURE_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace trapnoise {

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = false;
    std::size_t evaluations = 0;
};

// Adaptive Simpson integration on [a, b]. The interval is bisected until the
// Richardson error estimate |S2 - S1|/15 of each panel drops below its share
// of the tolerance. `converged` is false if the depth limit was hit anywhere.
QuadResult adaptive_simpson(const std::function<double(double)>& f, double a,
                            double b, double abs_tol, double rel_tol = 1e-12,
                            int max_depth = 30);

// Adaptive integration over [breaks.front(), breaks.back()] split at the
// given breakpoints. A loose first pass sets the scale, so relative
// tolerances stay meaningful for sharply peaked integrands whose
// whole-interval Simpson estimate is near zero.
QuadResult adaptive_on_breakpoints(const std::function<double(double)>& f,
                                   const std::vector<double>& breaks,
                                   double rel_tol);

} // namespace trapnoise

#endif
