#ifndef TRAPNOISE_NOISE_MODELS_HPP
#define TRAPNOISE_NOISE_MODELS_HPP

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "trapnoise/geometry.hpp"

namespace trapnoise {

// Symmetric directional noise PSD at the ion, (V/m)^2/Hz. Surface and
// technical model tensors carry a free overall amplitude s0 (set to 1) until
// calibrated against a measured rate; amplitude_known marks calibrated ones.
struct PsdTensor {
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    bool amplitude_known = false;
};

// Directional PSD along a (unit) direction, e . s . e.
double project(const PsdTensor& t, const Eigen::Vector3d& direction);

struct PatchParams {
    double d;   // ion-surface distance, m
    double xi;  // patch correlation length, m
};

// Fluctuating patch-potential noise: radial k-quadrature of
//   k^3 exp(-2 d k) S_xi(k),  S_xi = 2 pi xi^2 / (1 + xi^2 k^2)^(3/2),
// with the angular integral done analytically (the elementwise square of
// (cos t, sin t, 1) picks up pi, pi, 2 pi). Polarization S_zz/S_xx = 2 for
// every (d, xi).
PsdTensor patch_psd(const PatchParams& p);

// Same tensor with the angular integral also done numerically (iterated 2-D
// quadrature); the independent cross-check route for patch_psd.
PsdTensor patch_psd_numeric_theta(const PatchParams& p);

// Uncorrelated surface dipoles: plane integral of the squared dipole-field
// components (3 d x, 3 d y, x^2 + y^2 - 2 d^2) / r0^5 in polar coordinates,
// radial truncation at 1000 d plus analytic tails. Proportional to
// diag(1, 1, 2) (3 pi / 8) / d^4.
PsdTensor dipole_psd(double d);

// Technical noise, equal amplitude on every live electrode:
// s0 sum_k E_k E_k^T over non-ground electrodes.
PsdTensor technical_indep_psd(const TrapLayout& layout,
                              const Eigen::Vector3d& ion_position);

// Technical noise proportional to the applied voltage:
// s0 sum_k V_k^2 E_k E_k^T over the voltage table.
PsdTensor technical_dep_psd(const TrapLayout& layout,
                            const std::map<std::string, double>& dc_voltages,
                            const Eigen::Vector3d& ion_position);

// Electromagnetic pickup, common to all live electrodes: the rank-1 tensor
// s0 (sum_k E_k)(sum_k E_k)^T.
PsdTensor pickup_psd(const TrapLayout& layout, const Eigen::Vector3d& ion_position);

// Ratio of the two radial-mode PSDs versus the angle phi of the in-plane
// mode to the surface: R(phi) = S(e_vert(phi)) / S(e_horiz(phi)) with
// e_horiz = (0, cos phi, sin phi), e_vert = (0, -sin phi, cos phi).
// max_ratio/max_angle come from the closed-form extremum of the projected
// sinusoid, not from the grid.
struct RatioCurve {
    std::vector<double> angles_deg;
    std::vector<double> ratios;
    double max_ratio = 0.0;
    double max_angle_deg = 0.0;
};

RatioCurve ratio_curve(const PsdTensor& t, const std::vector<double>& angles_deg);

std::vector<double> uniform_angle_grid(double start_deg, double stop_deg,
                                       double step_deg);

} // namespace trapnoise

#endif
