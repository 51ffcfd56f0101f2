#ifndef TRAPNOISE_MULTIPOLE_HPP
#define TRAPNOISE_MULTIPOLE_HPP

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "trapnoise/fields.hpp"
#include "trapnoise/geometry.hpp"

namespace trapnoise {

// First- and second-order harmonic basis about `center`, in coordinates
// scaled by `scale` (r' = (r - center)/scale). x is the axial direction, so
// the rotationally symmetric quadrupole is Y0 = 2x'^2 - y'^2 - z'^2 and the
// radial-plane pair is Y1 = y'^2 - z'^2, Y2 = y'z'.
struct MultipoleBasis {
    enum Index { kY0 = 0, kY1 = 1, kY2 = 2, kDx = 3, kDy = 4, kDz = 5 };
    static constexpr int kSize = 6;

    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double scale = 1.0;

    double evaluate(int i, const Eigen::Vector3d& r) const;
    static const char* name(int i);
};

// Expansion coefficients C(i, k): basis function i, electrode k, such that
// the potential of electrode k at 1 V is approximately
// phi_k(center) + sum_i C(i, k) Y_i((r - center)/scale) near the center.
struct MultipoleMatrix {
    MultipoleBasis basis;
    std::vector<std::string> electrode_names;
    Eigen::MatrixXd coefficients;   // kSize x n_electrodes

    int column(const std::string& name) const;
};

// Projects the analytic gradient/Hessian of each controllable (DC or CENTER)
// electrode at `center` onto the basis. `scale` is normally the ion height.
MultipoleMatrix expand(const TrapLayout& layout, const Eigen::Vector3d& center,
                       double scale);

struct VoltageSet {
    std::map<std::string, double> volts;
    Eigen::VectorXd achieved_multipoles;  // kSize, basis units (V)
    double residual = 0.0;                // |C v - t| / |t|
    bool rank_warning = false;            // residual > 1e-3 of target norm
};

// Minimum-norm least squares via SVD, singular values below 1e-10 of the
// largest truncated.
VoltageSet solve_voltages(const MultipoleMatrix& m, const Eigen::VectorXd& target);

// Smallest radial curvature accepted by rotation_voltages; gives a ~50 kHz
// radial splitting for 40Ca+ at 2.6 MHz, enough to pin the mode angle
// against stray-field asymmetries.
inline constexpr double kCurvatureFloor = 1.0e6;  // V/m^2

// Voltages that realize the rotated radial quadrupole
//   C0 (2x^2 - y^2 - z^2) + C [cos(2 phi) (y^2 - z^2) + sin(2 phi) 2 y z]
// with vanishing dipole terms; phi is the resulting angle of the in-plane
// radial mode to the surface. Curvatures in V/m^2.
VoltageSet rotation_voltages(const MultipoleMatrix& m, double phi_deg,
                             double curvature, double axial_curvature,
                             double min_curvature = kCurvatureFloor);

// Mode rotation by a static negative bias on the RF rails: recomputes the
// equilibrium and modes with drive.rf_bias = bias. The out-of-plane mode
// aligns with the center-electrode field direction.
ModeSet rf_bias_rotation(const TrapLayout& layout, const DrivePoint& drive,
                         const IonSpecies& ion, double bias);

} // namespace trapnoise

#endif
