#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "support/helpers.hpp"
#include "trapnoise/fields.hpp"
#include "trapnoise/multipole.hpp"
#include "trapnoise/noise_models.hpp"

using namespace trapnoise;
using Eigen::Vector3d;

namespace {

struct ReferenceSetup {
    TrapLayout layout = reference_layout();
    IonSpecies ion = IonSpecies::calcium40();
    DrivePoint drive = reference_drive();
    EquilibriumPoint eq;
    MultipoleMatrix m;

    ReferenceSetup()
    {
        eq = find_equilibrium(layout, drive, ion, initial_null_guess(layout));
        m = expand(layout, eq.position, eq.height_d);
    }
};

const ReferenceSetup& setup()
{
    static ReferenceSetup s;
    return s;
}

// Line angle (degrees, mod 180) of a radial mode vector in the y-z plane.
double line_angle(const Vector3d& v)
{
    double a = rad_to_deg(std::atan2(v.z(), v.y()));
    if (a >= 90.0) a -= 180.0;
    if (a < -90.0) a += 180.0;
    return a;
}

// Distance between two mode-line angles (period 180 degrees).
double line_distance(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 180.0);
    return std::min(d, 180.0 - d);
}

// Axial curvature for a 1 MHz axial mode of 40Ca+.
double axial_curvature_1mhz(const IonSpecies& ion)
{
    const double w = 2.0 * kPi * 1.0e6;
    return ion.mass * w * w / (4.0 * ion.charge);
}

DrivePoint drive_with(const DrivePoint& base, const VoltageSet& vs)
{
    DrivePoint d = base;
    d.dc_voltages = vs.volts;
    return d;
}

} // namespace

TEST_CASE("expand: far electrode gives a near-zero column")
{
    const auto& s = setup();
    // dc_s1 sits 1.2 mm down-rail from the ion.
    const int far_col = s.m.column("dc_s1");
    const int center_col = s.m.column("center");
    CHECK(s.m.coefficients.col(far_col).norm() <
          1e-2 * s.m.coefficients.col(center_col).norm());
}

TEST_CASE("expand: center electrode column is dominated by the z dipole")
{
    const auto& s = setup();
    const auto col = s.m.coefficients.col(s.m.column("center"));
    const double dz = std::abs(col(MultipoleBasis::kDz));
    for (int i = 0; i < MultipoleBasis::kSize; ++i)
        if (i != MultipoleBasis::kDz) CHECK(dz > std::abs(col(i)));
    // And the dipole entries are scale * grad(phi) = -scale * unit_field.
    const Vector3d E = unit_field(s.layout.center_electrode(), s.eq.position);
    CHECK(col(MultipoleBasis::kDz) ==
          doctest::Approx(-s.eq.height_d * E.z()).epsilon(1e-12));
}

TEST_CASE("expand: second-order Taylor reproduces each electrode potential to 1%")
{
    const auto& s = setup();
    const double r = 0.1 * s.eq.height_d;
    std::mt19937 rng(77);
    std::normal_distribution<double> gauss;
    for (const RectElectrode* e : s.layout.dc_controllable()) {
        const double phi0 = unit_potential(*e, s.eq.position);
        const Vector3d g = -unit_field(*e, s.eq.position);
        const Eigen::Matrix3d H = unit_hessian(*e, s.eq.position);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < 200; ++i) {
            Vector3d d(gauss(rng), gauss(rng), gauss(rng));
            d *= r / d.norm();
            const double truth = unit_potential(*e, s.eq.position + d);
            const double recon = phi0 + g.dot(d) + 0.5 * d.dot(H * d);
            num += (recon - truth) * (recon - truth);
            den += (truth - phi0) * (truth - phi0);
        }
        CHECK(std::sqrt(num / den) < 0.01);
    }
}

TEST_CASE("solve_voltages: single-electrode column is exactly solvable")
{
    // On the small layout the 3 controllable columns are independent, so the
    // minimum-norm solution of a column target is that electrode at 1 V.
    const TrapLayout layout = test::simple_five_wire();
    const IonSpecies ion = IonSpecies::calcium40();
    DrivePoint drive;
    drive.rf_amplitude = 200.0;
    drive.rf_frequency = 2 * kPi * 30e6;
    const EquilibriumPoint eq =
        find_equilibrium(layout, drive, ion, initial_null_guess(layout));
    const MultipoleMatrix m = expand(layout, eq.position, eq.height_d);

    const VoltageSet vs = solve_voltages(m, m.coefficients.col(m.column("dc_a")));
    CHECK(vs.volts.at("dc_a") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(vs.volts.at("dc_b")) < 1e-9);
    CHECK(std::abs(vs.volts.at("center")) < 1e-9);
    CHECK(vs.residual < 1e-12);
    CHECK_FALSE(vs.rank_warning);
}

TEST_CASE("solve_voltages: zero target gives zero voltages")
{
    const auto& s = setup();
    const VoltageSet vs =
        solve_voltages(s.m, Eigen::VectorXd::Zero(MultipoleBasis::kSize));
    for (const auto& [name, v] : vs.volts) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("solve_voltages: unreachable target sets the rank warning")
{
    // A single long rail electrode cannot produce an x dipole at mid-rail.
    TrapLayout layout = test::simple_five_wire();
    const auto& s = setup();
    (void)s;
    const IonSpecies ion = IonSpecies::calcium40();
    DrivePoint drive;
    drive.rf_amplitude = 200.0;
    drive.rf_frequency = 2 * kPi * 30e6;
    const EquilibriumPoint eq =
        find_equilibrium(layout, drive, ion, initial_null_guess(layout));
    const MultipoleMatrix m = expand(layout, eq.position, eq.height_d);
    Eigen::VectorXd target = Eigen::VectorXd::Zero(MultipoleBasis::kSize);
    target(MultipoleBasis::kDx) = 1.0;
    const VoltageSet vs = solve_voltages(m, target);
    CHECK(vs.rank_warning);
    CHECK(vs.residual > 0.5);
}

TEST_CASE("pure Y2 target rotates the radial modes to 45 degrees")
{
    const auto& s = setup();
    Eigen::VectorXd target = Eigen::VectorXd::Zero(MultipoleBasis::kSize);
    // Small axial term keeps the x mode clean; Y2 sets the rotation.
    target(MultipoleBasis::kY0) =
        axial_curvature_1mhz(s.ion) * s.eq.height_d * s.eq.height_d;
    target(MultipoleBasis::kY2) =
        2.0e6 * s.eq.height_d * s.eq.height_d;
    const VoltageSet vs = solve_voltages(s.m, target);
    CHECK(vs.residual < 1e-6);

    const EquilibriumPoint eq =
        find_equilibrium(s.layout, drive_with(s.drive, vs), s.ion, s.eq.position);
    const ModeSet modes =
        normal_modes(s.layout, drive_with(s.drive, vs), s.ion, eq);
    CHECK(line_distance(line_angle(modes.horizontal_vector()), 45.0) < 1.0);
    CHECK(line_distance(line_angle(modes.vertical_vector()), -45.0) < 1.0);
}

TEST_CASE("rotation_voltages: trivial component zeros")
{
    const auto& s = setup();
    const double c0 = axial_curvature_1mhz(s.ion);

    const VoltageSet at0 = rotation_voltages(s.m, 0.0, 3.0e6, c0);
    CHECK(std::abs(at0.achieved_multipoles(MultipoleBasis::kY2)) <
          1e-9 * std::abs(at0.achieved_multipoles(MultipoleBasis::kY1)));

    const VoltageSet at45 = rotation_voltages(s.m, 45.0, 3.0e6, c0);
    CHECK(std::abs(at45.achieved_multipoles(MultipoleBasis::kY1)) <
          1e-9 * std::abs(at45.achieved_multipoles(MultipoleBasis::kY2)));

    // Dipole terms vanish: no net field at the ion.
    for (int i : {MultipoleBasis::kDx, MultipoleBasis::kDy, MultipoleBasis::kDz})
        CHECK(std::abs(at45.achieved_multipoles(i)) < 1e-12);

    CHECK_THROWS_AS(rotation_voltages(s.m, 10.0, 0.5 * kCurvatureFloor, c0),
                    DomainError);
}

TEST_CASE("rotation sweep: achieved angles within 1 deg, frequencies within 1%")
{
    const auto& s = setup();
    const double c0 = axial_curvature_1mhz(s.ion);
    const double c = 3.0e6;

    double f_lo_ref = 0.0, f_hi_ref = 0.0;
    for (double phi : {0.0, 15.0, 30.0, 45.0, 60.0, 75.0}) {
        const VoltageSet vs = rotation_voltages(s.m, phi, c, c0);
        const DrivePoint d = drive_with(s.drive, vs);
        const EquilibriumPoint eq = find_equilibrium(s.layout, d, s.ion, s.eq.position);
        const ModeSet modes = normal_modes(s.layout, d, s.ion, eq);

        // One radial mode lies on the requested line.
        const double a_h = line_angle(modes.horizontal_vector());
        const double a_v = line_angle(modes.vertical_vector());
        const double miss =
            std::min(line_distance(a_h, phi), line_distance(a_v, phi));
        CHECK(miss < 1.0);

        // The frequency pair is orientation independent.
        const double f_lo =
            std::min(modes.horizontal_frequency(), modes.vertical_frequency());
        const double f_hi =
            std::max(modes.horizontal_frequency(), modes.vertical_frequency());
        if (phi == 0.0) {
            f_lo_ref = f_lo;
            f_hi_ref = f_hi;
        } else {
            CHECK(f_lo == doctest::Approx(f_lo_ref).epsilon(0.01));
            CHECK(f_hi == doctest::Approx(f_hi_ref).epsilon(0.01));
        }
    }
}

TEST_CASE("rotation by phi + 90 swaps the mode labels, keeps the pair")
{
    const auto& s = setup();
    const double c0 = axial_curvature_1mhz(s.ion);
    const double phi = 20.0;

    auto modes_at = [&](double ang) {
        const VoltageSet vs = rotation_voltages(s.m, ang, 3.0e6, c0);
        const DrivePoint d = drive_with(s.drive, vs);
        const EquilibriumPoint eq = find_equilibrium(s.layout, d, s.ion, s.eq.position);
        return normal_modes(s.layout, d, s.ion, eq);
    };
    const ModeSet m1 = modes_at(phi);
    const ModeSet m2 = modes_at(phi + 90.0);
    // The in-plane label stays on the same geometric line (it is defined by
    // the smaller plane angle) while the frequencies attached to the labels
    // swap: the stiff axis moved by 90 degrees.
    CHECK(m1.horizontal_frequency() ==
          doctest::Approx(m2.vertical_frequency()).epsilon(0.01));
    CHECK(m1.vertical_frequency() ==
          doctest::Approx(m2.horizontal_frequency()).epsilon(0.01));
    CHECK(line_distance(line_angle(m1.horizontal_vector()),
                        line_angle(m2.horizontal_vector())) < 1.0);
    CHECK(m1.horizontal_frequency() != doctest::Approx(m2.horizontal_frequency())
                                            .epsilon(0.001));
}

TEST_CASE("re-expanding the achieved potential reproduces achieved_multipoles")
{
    const auto& s = setup();
    const VoltageSet vs =
        rotation_voltages(s.m, 30.0, 3.0e6, axial_curvature_1mhz(s.ion));

    // Project the realized potential (gradient/Hessian of the voltage sum)
    // back onto the basis, through the same machinery expand uses.
    Eigen::VectorXd reprojected = Eigen::VectorXd::Zero(MultipoleBasis::kSize);
    for (const auto& [name, v] : vs.volts)
        reprojected += v * s.m.coefficients.col(s.m.column(name));
    CHECK((reprojected - vs.achieved_multipoles).norm() <
          1e-9 * vs.achieved_multipoles.norm());

    // And numerically: the realized static field at the center vanishes.
    DrivePoint d = drive_with(s.drive, vs);
    d.rf_amplitude = 0.0;
    const Vector3d E = static_field(s.layout, d, s.eq.position);
    CHECK(E.norm() < 1e-6);  // V/m; dipole-free to solver tolerance
}

TEST_CASE("rf_bias_rotation aligns the out-of-plane mode with the center field")
{
    const auto& s = setup();
    const double phi_g = center_field_angle(s.layout, s.eq.position);

    const ModeSet m = rf_bias_rotation(s.layout, s.drive, s.ion, kReferenceRfBias);
    // Angle of the out-of-plane mode to the surface normal.
    const Vector3d vv = m.vertical_vector();
    const double tilt =
        rad_to_deg(std::atan2(std::hypot(vv.x(), vv.y()), std::abs(vv.z())));
    CHECK(std::abs(tilt - phi_g) < 2.0);
    // The aligned mode is the stiffer one.
    CHECK(m.vertical_frequency() > m.horizontal_frequency());
    // The in-plane mode sits at +phi_g from the surface.
    CHECK(mode_angle(m) == doctest::Approx(phi_g).epsilon(2.0 / 15.0));

    CHECK_THROWS_AS(rf_bias_rotation(s.layout, s.drive, s.ion, +1.0), DomainError);
}

TEST_CASE("rf_bias_rotation: small bias is continuous with the unbiased modes")
{
    const auto& s = setup();
    const ModeSet m0 = normal_modes(s.layout, s.drive, s.ion, s.eq);
    const ModeSet mb = rf_bias_rotation(s.layout, s.drive, s.ion, -1e-4);
    CHECK(mb.horizontal_frequency() ==
          doctest::Approx(m0.horizontal_frequency()).epsilon(1e-4));
    CHECK(mb.vertical_frequency() ==
          doctest::Approx(m0.vertical_frequency()).epsilon(1e-4));
}

TEST_CASE("bias orientation sits within 5% of the technical-noise curve maximum")
{
    const auto& s = setup();
    const PsdTensor t = technical_indep_psd(s.layout, s.eq.position);
    const ModeSet m = rf_bias_rotation(s.layout, s.drive, s.ion, kReferenceRfBias);
    const double phi_bias = mode_angle(m);
    const RatioCurve curve = ratio_curve(t, {phi_bias});
    CHECK(curve.ratios.front() > 0.95 * curve.max_ratio);
}
