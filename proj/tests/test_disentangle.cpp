#include <doctest.h>

#include <cmath>

#include "trapnoise/constants.hpp"
#include "trapnoise/disentangle.hpp"
#include "trapnoise/heating.hpp"
#include "trapnoise/noise_models.hpp"

using namespace trapnoise;

namespace {

DisentangleInput reference_input()
{
    const IonSpecies ca = IonSpecies::calcium40();
    DisentangleInput in;
    in.r_tot = {4.2, 0.5};
    in.r_techn = 29.3;
    in.phi_deg = 15.0;
    const double s = psd_from_rate(0.12e3, ca, 2.0 * kPi * 2.6e6);
    in.s_tot_h = {s, s * 0.03 / 0.12};
    in.r_surf = 2.0;
    return in;
}

} // namespace

TEST_CASE("extract_surface reproduces the reference magnitudes")
{
    const SurfaceEstimate est = extract_surface(reference_input());
    CHECK(est.s_surf_h.value == doctest::Approx(1.8e-12).epsilon(0.20));
    CHECK(est.s_surf_x.value == doctest::Approx(1.7e-12).epsilon(0.20));
    CHECK(est.surface_fraction.value > 0.0);
    CHECK(est.surface_fraction.value < 1.0);
    CHECK_FALSE(est.unphysical_fraction_warning);

    // First-order propagation over the two independent inputs.
    DisentangleInput in = reference_input();
    const double denom = in.r_surf * std::pow(std::cos(deg_to_rad(15.0)), 2) -
                         in.r_techn;
    const double expect_sigma = std::hypot(
        in.s_tot_h.value / denom * in.r_tot.sigma,
        (in.r_tot.value - in.r_techn) / denom * in.s_tot_h.sigma);
    CHECK(est.s_surf_h.sigma == doctest::Approx(expect_sigma).epsilon(1e-12));
}

TEST_CASE("extract_surface: pure-surface and pure-technical limits")
{
    DisentangleInput in = reference_input();
    const double r_surf_phi =
        in.r_surf * std::pow(std::cos(deg_to_rad(in.phi_deg)), 2);

    in.r_tot = {r_surf_phi, 0.1};
    SurfaceEstimate est = extract_surface(in);
    CHECK(est.surface_fraction.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(est.s_surf_h.value == doctest::Approx(in.s_tot_h.value).epsilon(1e-12));

    in.r_tot = {in.r_techn, 0.1};
    est = extract_surface(in);
    CHECK(est.surface_fraction.value == doctest::Approx(0.0).scale(1.0));
    CHECK(est.s_surf_h.value == doctest::Approx(0.0).scale(1e-12));
}

TEST_CASE("extract_surface: degenerate denominator and unphysical fraction")
{
    DisentangleInput in = reference_input();
    in.r_techn = in.r_surf * std::pow(std::cos(deg_to_rad(in.phi_deg)), 2);
    CHECK_THROWS_AS(extract_surface(in), DegenerateDenominator);

    in = reference_input();
    in.r_tot = {80.0, 0.5};  // far beyond the technical ratio
    const SurfaceEstimate est = extract_surface(in);
    CHECK(est.unphysical_fraction_warning);
}

TEST_CASE("extract_surface: linearity, monotonicity, projection consistency")
{
    DisentangleInput in = reference_input();
    const SurfaceEstimate base = extract_surface(in);

    // Linear in the total PSD; fraction invariant.
    in.s_tot_h.value *= 2.5;
    in.s_tot_h.sigma *= 2.5;
    const SurfaceEstimate scaled = extract_surface(in);
    CHECK(scaled.s_surf_h.value ==
          doctest::Approx(2.5 * base.s_surf_h.value).epsilon(1e-12));
    CHECK(scaled.s_surf_x.value ==
          doctest::Approx(2.5 * base.s_surf_x.value).epsilon(1e-12));
    CHECK(scaled.surface_fraction.value ==
          doctest::Approx(base.surface_fraction.value).epsilon(1e-12));

    // Fraction decreases as R_tot rises towards R_techn.
    in = reference_input();
    double prev = 2.0;
    for (double r = 2.0; r < 28.0; r += 5.0) {
        in.r_tot.value = r;
        const double frac = extract_surface(in).surface_fraction.value;
        if (r > 2.0) CHECK(frac < prev);
        prev = frac;
    }

    // s_surf_x * (r_surf sin^2 + cos^2) == s_surf_h.
    in = reference_input();
    const SurfaceEstimate est = extract_surface(in);
    const double c2 = std::pow(std::cos(deg_to_rad(in.phi_deg)), 2);
    const double proj = in.r_surf * (1.0 - c2) + c2;
    CHECK(est.s_surf_x.value * proj ==
          doctest::Approx(est.s_surf_h.value).epsilon(1e-12));
}

TEST_CASE("technical_ratio_at: reference layout near the bias angle")
{
    const TrapLayout layout = reference_layout();
    const IonSpecies ca = IonSpecies::calcium40();
    const DrivePoint drive = reference_drive();

    const EquilibriumPoint eq =
        find_equilibrium(layout, drive, ca, initial_null_guess(layout));
    const double phi_g = center_field_angle(layout, eq.position);

    const double r_g = technical_ratio_at(layout, drive, ca, phi_g);
    CHECK(r_g > 20.0);
    CHECK(r_g < 45.0);

    // At the curve argmax the convenience bridge returns the maximum.
    const PsdTensor t = technical_indep_psd(layout, eq.position);
    const RatioCurve c = ratio_curve(t, {0.0});
    const double r_max = technical_ratio_at(layout, drive, ca, c.max_angle_deg);
    CHECK(r_max == doctest::Approx(c.max_ratio).epsilon(1e-9));
    CHECK(r_g > 0.95 * r_max);
}
