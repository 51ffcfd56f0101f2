#ifndef TRAPNOISE_HEATING_HPP
#define TRAPNOISE_HEATING_HPP

#include <Eigen/Core>
#include <filesystem>
#include <vector>

#include "trapnoise/constants.hpp"

namespace trapnoise {

// One angle-resolved heating measurement: rates (quanta/ms) and 1-sigma
// uncertainties for both radial modes, taken at a common mode frequency.
struct HeatingMeasurement {
    double angle_deg = 0.0;       // angle phi of the in-plane mode
    double rate_h = 0.0;          // quanta/ms, in-plane mode
    double sigma_h = 0.0;
    double rate_v = 0.0;          // quanta/ms, out-of-plane mode
    double sigma_v = 0.0;
    double mode_frequency = 0.0;  // rad/s
};

// Heating rate (quanta/s) from the directional PSD (V/m)^2/Hz:
// ndot = e^2 S / (4 m hbar omega).
double rate_from_psd(double s_dir, const IonSpecies& ion, double omega);
double psd_from_rate(double rate, const IonSpecies& ion, double omega);

// Two-mode angle model:
//   S_vert  = s_max cos^2(phi - phi_max) + s_min sin^2(phi - phi_max)
//   S_horiz = s_max sin^2(phi - phi_max) + s_min cos^2(phi - phi_max)
struct AnglePsd {
    double s_v = 0.0;
    double s_h = 0.0;
};

AnglePsd angle_model(double s_max, double s_min, double phi_max_deg,
                     double phi_deg);

struct AngleModelFit {
    double s_max = 0.0;            // (V/m)^2/Hz
    double s_min = 0.0;
    double phi_max_deg = 0.0;      // in [0, 180)
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (s_max, s_min, phi_max_deg)
    bool negative_smin_warning = false;  // s_min < 0 beyond 2 sigma

    double sigma_s_max() const;
    double sigma_s_min() const;
    double sigma_phi_max() const;
};

// Joint weighted linear least squares of both modes on the reparameterization
// S = A +- (B cos 2 phi + C sin 2 phi); needs measurements at >= 3 distinct
// angles. Rates are converted to PSDs with the per-record mode frequency.
AngleModelFit fit_angle_model(const std::vector<HeatingMeasurement>& data,
                              const IonSpecies& ion);

struct ValueWithSigma {
    double value = 0.0;
    double sigma = 0.0;
};

// Ratio of two heating rates with first-order error propagation.
ValueWithSigma voltage_scaling_factor(double rate_i, double sigma_i,
                                      double rate_ii, double sigma_ii);

// Heating rate predicted by the voltage-dependent model when all control
// voltages are scaled by `factor` (PSD scales with the square).
double voltage_scaling_model_prediction(double factor);

// Measurement CSV: angle_deg, rate_h_quanta_per_ms, sigma_h,
// rate_v_quanta_per_ms, sigma_v, mode_freq_MHz. '#' lines are comments.
std::vector<HeatingMeasurement> load_measurements(const std::filesystem::path& path);

} // namespace trapnoise

#endif
