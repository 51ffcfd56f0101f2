#ifndef TRAPNOISE_DISENTANGLE_HPP
#define TRAPNOISE_DISENTANGLE_HPP

#include "trapnoise/fields.hpp"
#include "trapnoise/geometry.hpp"
#include "trapnoise/heating.hpp"

namespace trapnoise {

// Inputs for the surface/technical separation at measurement angle phi:
// measured total ratio, the technical-model ratio at that angle, the total
// PSD along the in-plane mode, and the surface-model ratio (2 for patch or
// dipole noise).
struct DisentangleInput {
    ValueWithSigma r_tot;
    double r_techn = 0.0;
    double phi_deg = 0.0;
    ValueWithSigma s_tot_h;    // (V/m)^2/Hz
    double r_surf = 2.0;
};

struct SurfaceEstimate {
    ValueWithSigma s_surf_h;          // along the in-plane mode at phi
    ValueWithSigma s_surf_x;          // parallel to the surface
    ValueWithSigma surface_fraction;  // (R_tot - R_techn)/(R_surf,phi - R_techn)
    bool unphysical_fraction_warning = false;  // outside [0,1] beyond 2 sigma
};

// S_surf,h = S_tot,h (R_tot - R_techn) / (R_surf cos^2 phi - R_techn) and
// S_surf,x = S_surf,h / (R_surf sin^2 phi + cos^2 phi), with first-order
// propagation over (r_tot, s_tot_h); r_techn is treated as exact.
SurfaceEstimate extract_surface(const DisentangleInput& in);

// Voltage-independent technical-model ratio at a given in-plane mode angle,
// evaluated at the trap equilibrium of (layout, drive).
double technical_ratio_at(const TrapLayout& layout, const DrivePoint& drive,
                          const IonSpecies& ion, double angle_deg);

} // namespace trapnoise

#endif
