#include "trapnoise/disentangle.hpp"

#include <cmath>

#include "trapnoise/errors.hpp"
#include "trapnoise/noise_models.hpp"

namespace trapnoise {

SurfaceEstimate extract_surface(const DisentangleInput& in)
{
    if (in.s_tot_h.value < 0.0)
        throw DomainError("total PSD must be non-negative");
    const double phi = deg_to_rad(in.phi_deg);
    const double c2 = std::cos(phi) * std::cos(phi);
    const double s2 = std::sin(phi) * std::sin(phi);
    const double r_surf_phi = in.r_surf * c2;
    const double denom = r_surf_phi - in.r_techn;
    if (std::abs(denom) < 1e-12 * std::max(1.0, std::abs(in.r_techn)))
        throw DegenerateDenominator(
            "R_surf cos^2(phi) equals R_techn; extraction undefined");

    SurfaceEstimate out;
    const double frac = (in.r_tot.value - in.r_techn) / denom;
    const double dfrac = in.r_tot.sigma / std::abs(denom);
    out.surface_fraction = {frac, dfrac};

    out.s_surf_h.value = in.s_tot_h.value * frac;
    // Independent Gaussians (r_tot, s_tot_h); first order.
    const double d_r = in.s_tot_h.value / denom;
    out.s_surf_h.sigma = std::hypot(d_r * in.r_tot.sigma, frac * in.s_tot_h.sigma);

    const double proj = in.r_surf * s2 + c2;
    out.s_surf_x.value = out.s_surf_h.value / proj;
    out.s_surf_x.sigma = out.s_surf_h.sigma / proj;

    out.unphysical_fraction_warning =
        frac < -2.0 * dfrac || frac > 1.0 + 2.0 * dfrac;
    return out;
}

double technical_ratio_at(const TrapLayout& layout, const DrivePoint& drive,
                          const IonSpecies& ion, double angle_deg)
{
    const EquilibriumPoint eq =
        find_equilibrium(layout, drive, ion, initial_null_guess(layout));
    const PsdTensor t = technical_indep_psd(layout, eq.position);
    const RatioCurve c = ratio_curve(t, {angle_deg});
    return c.ratios.front();
}

} // namespace trapnoise
