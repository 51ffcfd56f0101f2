#ifndef TRAPNOISE_FIELDS_HPP
#define TRAPNOISE_FIELDS_HPP

#include <Eigen/Core>
#include <array>
#include <map>
#include <string>

#include "trapnoise/constants.hpp"
#include "trapnoise/geometry.hpp"

namespace trapnoise {

// Operating point of the trap drive. rf_amplitude is zero-to-peak; rf_bias is
// a static offset applied to every RF electrode on top of the drive.
struct DrivePoint {
    double rf_amplitude = 0.0;                // V
    double rf_frequency = 0.0;                // rad/s
    double rf_bias = 0.0;                     // V
    std::map<std::string, double> dc_voltages;  // electrode name -> V
    // Uniform stray field at the trap, V/m. Shifts the equilibrium without
    // contributing curvature.
    Eigen::Vector3d stray_field = Eigen::Vector3d::Zero();

    double dc_voltage(const std::string& name) const
    {
        auto it = dc_voltages.find(name);
        return it == dc_voltages.end() ? 0.0 : it->second;
    }
};

// Drive used throughout for the reference layout; chosen to give 2.6 MHz
// radial frequencies for 40Ca+ (q parameter 0.23).
DrivePoint reference_drive();
inline constexpr double kReferenceRfFrequency = 2.0 * kPi * 32.0e6;  // rad/s
inline constexpr double kReferenceRfAmplitude = 340.3;               // V
// Negative rail bias that splits the radial modes by ~130 kHz while keeping
// both inside 2.6 +- 0.1 MHz; used by the bias-rotation experiments.
inline constexpr double kReferenceRfBias = -1.0;                     // V

struct EquilibriumPoint {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m
    double height_d = 0.0;                                // m, z-component
};

// Normal modes at the equilibrium. Index 0 is the axial mode; 1 is the
// in-plane radial mode (the one at the smaller angle to the surface plane),
// 2 the out-of-plane one. Ties in the plane angle go to the lower frequency.
struct ModeSet {
    std::array<double, 3> frequencies{};          // rad/s
    std::array<Eigen::Vector3d, 3> vectors{};

    double axial_frequency() const { return frequencies[0]; }
    double horizontal_frequency() const { return frequencies[1]; }
    double vertical_frequency() const { return frequencies[2]; }
    const Eigen::Vector3d& axial_vector() const { return vectors[0]; }
    const Eigen::Vector3d& horizontal_vector() const { return vectors[1]; }
    const Eigen::Vector3d& vertical_vector() const { return vectors[2]; }
};

// --- Single-electrode analytic solutions -----------------------------------
//
// Potential of a rectangle held at 1 V in an otherwise grounded plane,
// evaluated at p with p.z > 0 (solid-angle solution). unit_field is the
// electric field per volt, E = -grad(phi). unit_hessian holds the second
// derivatives of phi (so the field Jacobian is its negative), and unit_third
// the symmetric third-derivative tensor, T[k](i,j) = d3 phi / dxi dxj dxk.

double unit_potential(const RectElectrode& e, const Eigen::Vector3d& p);
Eigen::Vector3d unit_field(const RectElectrode& e, const Eigen::Vector3d& p);
Eigen::Matrix3d unit_hessian(const RectElectrode& e, const Eigen::Vector3d& p);
std::array<Eigen::Matrix3d, 3> unit_third(const RectElectrode& e,
                                          const Eigen::Vector3d& p);

// --- Layout-level quantities ------------------------------------------------

// Per-volt RF field: sum of unit fields over the rf_names electrodes.
Eigen::Vector3d rf_unit_field(const TrapLayout& layout, const Eigen::Vector3d& p);

// Static potential (V) and field (V/m) from DC voltages plus the RF bias.
double static_potential(const TrapLayout& layout, const DrivePoint& drive,
                        const Eigen::Vector3d& p);
Eigen::Vector3d static_field(const TrapLayout& layout, const DrivePoint& drive,
                             const Eigen::Vector3d& p);

// Time-averaged RF confinement, q^2 |E_RF|^2 / (4 m Omega^2), in joules.
double pseudopotential(const TrapLayout& layout, const DrivePoint& drive,
                       const IonSpecies& ion, const Eigen::Vector3d& p);

// Total potential energy (static + pseudo) and its analytic derivatives.
double total_potential(const TrapLayout& layout, const DrivePoint& drive,
                       const IonSpecies& ion, const Eigen::Vector3d& p);
Eigen::Vector3d total_gradient(const TrapLayout& layout, const DrivePoint& drive,
                               const IonSpecies& ion, const Eigen::Vector3d& p);
Eigen::Matrix3d total_hessian(const TrapLayout& layout, const DrivePoint& drive,
                              const IonSpecies& ion, const Eigen::Vector3d& p);

// Newton search (with backtracking) for the potential minimum. Converged when
// |grad U| < 1e-12 * (q * V_scale / height of the initial guess).
EquilibriumPoint find_equilibrium(const TrapLayout& layout, const DrivePoint& drive,
                                  const IonSpecies& ion,
                                  const Eigen::Vector3d& initial_guess);

// Starting point for the null search: above the center electrode at a height
// of one center-electrode width.
Eigen::Vector3d initial_null_guess(const TrapLayout& layout);

ModeSet normal_modes(const TrapLayout& layout, const DrivePoint& drive,
                     const IonSpecies& ion, const EquilibriumPoint& eq);

// Angle of the in-plane radial mode to the surface plane, degrees in
// [-90, 90), measured in the y-z plane.
double mode_angle(const ModeSet& modes);

// Angle of the center-electrode field to the surface normal at p, degrees.
double center_field_angle(const TrapLayout& layout, const Eigen::Vector3d& p);

} // namespace trapnoise

#endif
