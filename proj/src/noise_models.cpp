#include "trapnoise/noise_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "trapnoise/constants.hpp"
#include "trapnoise/errors.hpp"
#include "trapnoise/fields.hpp"
#include "trapnoise/quadrature.hpp"

namespace trapnoise {

double project(const PsdTensor& t, const Eigen::Vector3d& direction)
{
    return direction.dot(t.s * direction);
}

namespace {

void check_patch(const PatchParams& p)
{
    if (!(p.d > 0.0) || !(p.xi > 0.0))
        throw DomainError("patch parameters must be positive");
}

// Radial part of the patch integral in u = 2 d k; exp(-u) makes everything
// beyond u ~ 40 irrelevant (integrand < 1e-16 of the peak).
constexpr double kPatchCutoff = 45.0;

// Breakpoints resolve both scales of the integrand: the correlation rolloff
// at u ~ 2 d / xi and the exponential damping at u ~ 1.
std::vector<double> patch_breaks(const PatchParams& p)
{
    const double knee = std::clamp(2.0 * p.d / p.xi, 1e-6, kPatchCutoff / 2.0);
    std::vector<double> b = {0.0, 0.25 * knee, knee, 4.0 * knee};
    for (double v : {1.0, 5.0, 15.0, kPatchCutoff})
        if (v > b.back()) b.push_back(v);
    return b;
}

double patch_weight(const PatchParams& p, double u)
{
    const double k = u / (2.0 * p.d);
    const double xk = p.xi * k;
    return k * k * k * std::exp(-u) * 2.0 * kPi * p.xi * p.xi /
           std::pow(1.0 + xk * xk, 1.5) / (2.0 * p.d);
}

double patch_radial(const PatchParams& p)
{
    QuadResult r = adaptive_on_breakpoints(
        [&](double u) { return patch_weight(p, u); }, patch_breaks(p), 1e-11);
    if (!r.converged)
        throw QuadratureFailure("patch radial quadrature did not converge");
    return r.value;
}

} // namespace

PsdTensor patch_psd(const PatchParams& p)
{
    check_patch(p);
    const double K = patch_radial(p);
    PsdTensor t;
    t.s = Eigen::Vector3d(kPi * K, kPi * K, 2.0 * kPi * K).asDiagonal();
    return t;
}

PsdTensor patch_psd_numeric_theta(const PatchParams& p)
{
    check_patch(p);
    // Iterated 2-D quadrature. The correlation spectrum is isotropic, so the
    // theta factor of each component separates; it is still evaluated by
    // numerical quadrature here to cross-check the analytic pi / pi / 2 pi
    // weights of the production route.
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (int comp = 0; comp < 3; ++comp) {
        auto angular = [comp](double theta) {
            const double w[3] = {std::cos(theta), std::sin(theta), 1.0};
            return w[comp] * w[comp];
        };
        QuadResult a = adaptive_simpson(angular, 0.0, 2.0 * kPi, 1e-13, 0.0);
        QuadResult r = adaptive_on_breakpoints(
            [&](double u) { return patch_weight(p, u); }, patch_breaks(p), 1e-11);
        if (!a.converged || !r.converged)
            throw QuadratureFailure("patch 2-D quadrature did not converge");
        s(comp) = a.value * r.value;
    }
    PsdTensor t;
    t.s = s.asDiagonal();
    return t;
}

PsdTensor dipole_psd(double d)
{
    if (!(d > 0.0))
        throw DomainError("dipole model distance must be positive");

    // Polar-coordinate radial integrals; the angular factors are pi for the
    // in-plane components and 2 pi for z.
    auto fx = [d](double rho) {
        const double r2 = rho * rho + d * d;
        return 9.0 * d * d * rho * rho * rho / std::pow(r2, 5);
    };
    auto fz = [d](double rho) {
        const double r2 = rho * rho + d * d;
        const double q = rho * rho - 2.0 * d * d;
        return rho * q * q / std::pow(r2, 5);
    };
    const double T = 1000.0 * d;
    const std::vector<double> breaks = {0.0,       0.3 * d,   d,        3.0 * d,
                                        10.0 * d,  30.0 * d,  100.0 * d, T};
    QuadResult rx = adaptive_on_breakpoints(fx, breaks, 1e-11);
    QuadResult rz = adaptive_on_breakpoints(fz, breaks, 1e-11);
    if (!rx.converged || !rz.converged)
        throw QuadratureFailure("dipole quadrature did not converge");
    // Tails fall off as rho^-7 (in plane) and rho^-5 (z).
    const double tail_x = 9.0 * d * d / (6.0 * std::pow(T, 6));
    const double tail_z = 1.0 / (4.0 * std::pow(T, 4));
    const double sx = kPi * (rx.value + tail_x);
    const double sz = 2.0 * kPi * (rz.value + tail_z);
    PsdTensor t;
    t.s = Eigen::Vector3d(sx, sx, sz).asDiagonal();
    return t;
}

namespace {

void check_position(const Eigen::Vector3d& p)
{
    if (!(p.z() > 0.0))
        throw DomainError("ion position must lie above the electrode plane");
}

} // namespace

PsdTensor technical_indep_psd(const TrapLayout& layout,
                              const Eigen::Vector3d& ion_position)
{
    check_position(ion_position);
    PsdTensor t;
    for (const RectElectrode* e : layout.non_ground()) {
        const Eigen::Vector3d E = unit_field(*e, ion_position);
        t.s += E * E.transpose();
    }
    return t;
}

PsdTensor technical_dep_psd(const TrapLayout& layout,
                            const std::map<std::string, double>& dc_voltages,
                            const Eigen::Vector3d& ion_position)
{
    check_position(ion_position);
    PsdTensor t;
    for (const auto& [name, v] : dc_voltages) {
        const Eigen::Vector3d E = unit_field(layout.electrode(name), ion_position);
        t.s += (v * v) * (E * E.transpose());
    }
    return t;
}

PsdTensor pickup_psd(const TrapLayout& layout, const Eigen::Vector3d& ion_position)
{
    check_position(ion_position);
    Eigen::Vector3d E = Eigen::Vector3d::Zero();
    for (const RectElectrode* e : layout.non_ground())
        E += unit_field(*e, ion_position);
    PsdTensor t;
    t.s = E * E.transpose();
    return t;
}

RatioCurve ratio_curve(const PsdTensor& t, const std::vector<double>& angles_deg)
{
    if (angles_deg.empty())
        throw DomainError("ratio_curve: empty angle grid");

    // Projections onto the radial pair are a sinusoid in 2 phi:
    // S_horiz = a + b cos(2 phi) + c sin(2 phi), S_vert the sign-flipped one.
    const double a = 0.5 * (t.s(1, 1) + t.s(2, 2));
    const double b = 0.5 * (t.s(1, 1) - t.s(2, 2));
    const double c = t.s(1, 2);
    const double u = std::hypot(b, c);
    if (a + u < 1e-30)
        throw DegenerateProjection("PSD tensor has no radial-plane content");

    RatioCurve curve;
    curve.angles_deg = angles_deg;
    curve.ratios.reserve(angles_deg.size());
    for (double deg : angles_deg) {
        const double w = b * std::cos(2.0 * deg_to_rad(deg)) +
                         c * std::sin(2.0 * deg_to_rad(deg));
        const double sh = a + w;
        const double sv = a - w;
        curve.ratios.push_back(
            sh > 0.0 ? sv / sh : std::numeric_limits<double>::infinity());
    }
    curve.max_ratio = (a - u) > 0.0
                          ? (a + u) / (a - u)
                          : std::numeric_limits<double>::infinity();
    double phi = 0.5 * rad_to_deg(std::atan2(-c, -b));
    if (phi >= 90.0) phi -= 180.0;
    if (phi < -90.0) phi += 180.0;
    curve.max_angle_deg = u > 0.0 ? phi : 0.0;
    return curve;
}

std::vector<double> uniform_angle_grid(double start_deg, double stop_deg,
                                       double step_deg)
{
    if (!(step_deg > 0.0) || !(stop_deg >= start_deg))
        throw DomainError("invalid angle grid");
    std::vector<double> g;
    const int n = static_cast<int>(std::floor((stop_deg - start_deg) / step_deg + 0.5));
    for (int i = 0; i <= n; ++i) g.push_back(start_deg + i * step_deg);
    return g;
}

} // namespace trapnoise
