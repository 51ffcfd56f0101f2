// Analytic electrostatics of rectangular electrodes in a grounded plane.
//
// The potential of a rectangle [x1,x2]x[y1,y2] held at 1 V in the z = 0
// plane is the solid angle it subtends, phi = Omega / (2 pi). Written per
// corner with u = x - xi, v = y - yj, R = |(u,v,z)|:
//
//   phi = (1/2pi) sum_ij s_ij f(u_i, v_j, z),   f = atan(u v / (z R)),
//
// s_ij = +1 for (min,min) and (max,max), -1 otherwise. All derivatives up to
// third order are closed-form rationals in (u, v, z, R); the zz-type third
// derivatives come from differentiating the Laplace identity instead of
// direct expansion.

#include "trapnoise/fields.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace trapnoise {

namespace {

struct CornerDerivs {
    double f = 0.0;
    double fu = 0.0, fv = 0.0, fz = 0.0;
    double fuu = 0.0, fvv = 0.0, fzz = 0.0, fuv = 0.0, fuz = 0.0, fvz = 0.0;
    double fuuu = 0.0, fuuv = 0.0, fuuz = 0.0, fuvv = 0.0, fuvz = 0.0,
           fvvv = 0.0, fvvz = 0.0, fuzz = 0.0, fvzz = 0.0, fzzz = 0.0;
};

// All derivative orders of the corner function at (u, v, z), z > 0.
CornerDerivs corner(double u, double v, double z, int order)
{
    CornerDerivs d;
    const double R2 = u * u + v * v + z * z;
    const double R = std::sqrt(R2);
    d.f = std::atan2(u * v, z * R);
    if (order < 1) return d;

    const double A = u * u + z * z;
    const double B = v * v + z * z;
    d.fu = z * v / (R * A);
    d.fv = z * u / (R * B);
    d.fz = -u * v * (R2 + z * z) / (R * A * B);
    if (order < 2) return d;

    const double R3 = R * R2;
    const double W = A + 2.0 * R2;
    const double Wp = B + 2.0 * R2;
    d.fuu = -z * u * v * W / (R3 * A * A);
    d.fvv = -z * u * v * Wp / (R3 * B * B);
    d.fuv = z / R3;
    d.fuz = v * ((u * u + v * v) / (R3 * A) - 2.0 * z * z / (R * A * A));
    d.fvz = u * ((u * u + v * v) / (R3 * B) - 2.0 * z * z / (R * B * B));
    d.fzz = -(d.fuu + d.fvv);
    if (order < 3) return d;

    const double R5 = R3 * R2;
    d.fuuv = -3.0 * u * z / R5;
    d.fuvv = -3.0 * v * z / R5;
    d.fuvz = (R2 - 3.0 * z * z) / R5;
    d.fuuu = -z * v * (W + 6.0 * u * u - 3.0 * u * u * W / R2 - 4.0 * u * u * W / A) /
             (R3 * A * A);
    d.fuuz = -u * v * (W + 6.0 * z * z - 3.0 * z * z * W / R2 - 4.0 * z * z * W / A) /
             (R3 * A * A);
    d.fvvv = -z * u * (Wp + 6.0 * v * v - 3.0 * v * v * Wp / R2 - 4.0 * v * v * Wp / B) /
             (R3 * B * B);
    d.fvvz = -u * v * (Wp + 6.0 * z * z - 3.0 * z * z * Wp / R2 - 4.0 * z * z * Wp / B) /
             (R3 * B * B);
    d.fuzz = -(d.fuuu + d.fuvv);
    d.fvzz = -(d.fuuv + d.fvvv);
    d.fzzz = -(d.fuuz + d.fvvz);
    return d;
}

struct RectDerivs {
    double phi = 0.0;
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
    std::array<Eigen::Matrix3d, 3> third = {Eigen::Matrix3d::Zero(),
                                            Eigen::Matrix3d::Zero(),
                                            Eigen::Matrix3d::Zero()};
};

RectDerivs rect_derivs(const RectElectrode& e, const Eigen::Vector3d& p, int order)
{
    if (!(p.z() > 0.0))
        throw DomainError("field evaluation requires z > 0 (electrode '" +
                          e.name + "')");
    RectDerivs out;
    const double xs[2] = {e.x_min, e.x_max};
    const double ys[2] = {e.y_min, e.y_max};
    const double z = p.z();
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double s = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            const CornerDerivs d = corner(p.x() - xs[i], p.y() - ys[j], z, order);
            out.phi += s * d.f;
            if (order < 1) continue;
            out.grad += s * Eigen::Vector3d(d.fu, d.fv, d.fz);
            if (order < 2) continue;
            Eigen::Matrix3d H;
            H << d.fuu, d.fuv, d.fuz,
                 d.fuv, d.fvv, d.fvz,
                 d.fuz, d.fvz, d.fzz;
            out.hess += s * H;
            if (order < 3) continue;
            Eigen::Matrix3d Tx, Ty, Tz;
            Tx << d.fuuu, d.fuuv, d.fuuz,
                  d.fuuv, d.fuvv, d.fuvz,
                  d.fuuz, d.fuvz, d.fuzz;
            Ty << d.fuuv, d.fuvv, d.fuvz,
                  d.fuvv, d.fvvv, d.fvvz,
                  d.fuvz, d.fvvz, d.fvzz;
            Tz << d.fuuz, d.fuvz, d.fuzz,
                  d.fuvz, d.fvvz, d.fvzz,
                  d.fuzz, d.fvzz, d.fzzz;
            out.third[0] += s * Tx;
            out.third[1] += s * Ty;
            out.third[2] += s * Tz;
        }
    }
    const double norm = 1.0 / (2.0 * kPi);
    out.phi *= norm;
    out.grad *= norm;
    out.hess *= norm;
    for (auto& t : out.third) t *= norm;
    return out;
}

} // namespace

double unit_potential(const RectElectrode& e, const Eigen::Vector3d& p)
{
    return rect_derivs(e, p, 0).phi;
}

Eigen::Vector3d unit_field(const RectElectrode& e, const Eigen::Vector3d& p)
{
    return -rect_derivs(e, p, 1).grad;
}

Eigen::Matrix3d unit_hessian(const RectElectrode& e, const Eigen::Vector3d& p)
{
    return rect_derivs(e, p, 2).hess;
}

std::array<Eigen::Matrix3d, 3> unit_third(const RectElectrode& e,
                                          const Eigen::Vector3d& p)
{
    return rect_derivs(e, p, 3).third;
}

DrivePoint reference_drive()
{
    DrivePoint d;
    d.rf_amplitude = kReferenceRfAmplitude;
    d.rf_frequency = kReferenceRfFrequency;
    return d;
}

Eigen::Vector3d rf_unit_field(const TrapLayout& layout, const Eigen::Vector3d& p)
{
    Eigen::Vector3d E = Eigen::Vector3d::Zero();
    for (const auto& n : layout.rf_names)
        E += unit_field(layout.electrode(n), p);
    return E;
}

namespace {

// Static voltage on an electrode: DC table entry plus the RF bias on rails.
double electrode_static_voltage(const TrapLayout& layout, const DrivePoint& drive,
                                const RectElectrode& e)
{
    double v = drive.dc_voltage(e.name);
    if (layout.is_rf(e.name)) v += drive.rf_bias;
    return v;
}

struct StaticDerivs {
    double phi = 0.0;                                     // V
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();       // V/m
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();       // V/m^2
};

StaticDerivs static_derivs(const TrapLayout& layout, const DrivePoint& drive,
                           const Eigen::Vector3d& p, int order)
{
    StaticDerivs out;
    for (const auto& e : layout.electrodes) {
        const double v = electrode_static_voltage(layout, drive, e);
        if (v == 0.0) continue;
        const RectDerivs d = rect_derivs(e, p, order);
        out.phi += v * d.phi;
        if (order >= 1) out.grad += v * d.grad;
        if (order >= 2) out.hess += v * d.hess;
    }
    return out;
}

struct RfDerivs {
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();       // of per-volt potential
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
    std::array<Eigen::Matrix3d, 3> third = {Eigen::Matrix3d::Zero(),
                                            Eigen::Matrix3d::Zero(),
                                            Eigen::Matrix3d::Zero()};
};

RfDerivs rf_derivs(const TrapLayout& layout, const Eigen::Vector3d& p, int order)
{
    RfDerivs out;
    for (const auto& n : layout.rf_names) {
        const RectDerivs d = rect_derivs(layout.electrode(n), p, order);
        out.grad += d.grad;
        if (order >= 2) out.hess += d.hess;
        if (order >= 3)
            for (int k = 0; k < 3; ++k) out.third[k] += d.third[k];
    }
    return out;
}

double pseudo_prefactor(const DrivePoint& drive, const IonSpecies& ion)
{
    if (!(drive.rf_frequency > 0.0))
        throw DomainError("rf_frequency must be positive");
    const double qv = ion.charge * drive.rf_amplitude;
    return qv * qv / (4.0 * ion.mass * drive.rf_frequency * drive.rf_frequency);
}

} // namespace

double static_potential(const TrapLayout& layout, const DrivePoint& drive,
                        const Eigen::Vector3d& p)
{
    return static_derivs(layout, drive, p, 0).phi;
}

Eigen::Vector3d static_field(const TrapLayout& layout, const DrivePoint& drive,
                             const Eigen::Vector3d& p)
{
    return -static_derivs(layout, drive, p, 1).grad;
}

double pseudopotential(const TrapLayout& layout, const DrivePoint& drive,
                       const IonSpecies& ion, const Eigen::Vector3d& p)
{
    const Eigen::Vector3d g = rf_derivs(layout, p, 1).grad;
    return pseudo_prefactor(drive, ion) * g.squaredNorm();
}

double total_potential(const TrapLayout& layout, const DrivePoint& drive,
                       const IonSpecies& ion, const Eigen::Vector3d& p)
{
    return ion.charge * (static_potential(layout, drive, p) -
                         drive.stray_field.dot(p)) +
           pseudopotential(layout, drive, ion, p);
}

Eigen::Vector3d total_gradient(const TrapLayout& layout, const DrivePoint& drive,
                               const IonSpecies& ion, const Eigen::Vector3d& p)
{
    const StaticDerivs st = static_derivs(layout, drive, p, 1);
    const RfDerivs rf = rf_derivs(layout, p, 2);
    // grad |grad phi_rf|^2 = 2 H g
    return ion.charge * (st.grad - drive.stray_field) +
           pseudo_prefactor(drive, ion) * 2.0 * (rf.hess * rf.grad);
}

Eigen::Matrix3d total_hessian(const TrapLayout& layout, const DrivePoint& drive,
                              const IonSpecies& ion, const Eigen::Vector3d& p)
{
    const StaticDerivs st = static_derivs(layout, drive, p, 2);
    const RfDerivs rf = rf_derivs(layout, p, 3);
    Eigen::Matrix3d third_dot_g = Eigen::Matrix3d::Zero();
    for (int k = 0; k < 3; ++k) third_dot_g += rf.grad(k) * rf.third[k];
    // hess |grad phi_rf|^2 = 2 (H^2 + sum_k g_k T_k)
    return ion.charge * st.hess +
           pseudo_prefactor(drive, ion) * 2.0 * (rf.hess * rf.hess + third_dot_g);
}

EquilibriumPoint find_equilibrium(const TrapLayout& layout, const DrivePoint& drive,
                                  const IonSpecies& ion,
                                  const Eigen::Vector3d& initial_guess)
{
    if (!(initial_guess.z() > 0.0))
        throw DomainError("equilibrium guess must have z > 0");

    double v_scale = std::max(1.0, std::abs(drive.rf_amplitude));
    v_scale = std::max(v_scale, std::abs(drive.rf_bias));
    for (const auto& [name, v] : drive.dc_voltages)
        v_scale = std::max(v_scale, std::abs(v));
    const double force_tol =
        1e-12 * ion.charge * v_scale / initial_guess.z();

    Eigen::Vector3d x = initial_guess;
    constexpr int kMaxIter = 200;
    for (int it = 0; it < kMaxIter; ++it) {
        const Eigen::Vector3d g = total_gradient(layout, drive, ion, x);
        if (g.norm() < force_tol) {
            const Eigen::Matrix3d H = total_hessian(layout, drive, ion, x);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
            const double lmax = es.eigenvalues().maxCoeff();
            if (!(lmax > 0.0))
                throw UnstablePoint("no confining curvature at solution");
            if (es.eigenvalues().minCoeff() < -1e-9 * lmax)
                throw UnstablePoint("equilibrium Hessian not positive definite");
            EquilibriumPoint eq;
            eq.position = x;
            eq.height_d = x.z();
            return eq;
        }
        // Newton step towards the stationary point in the Hessian eigenbasis.
        // Eigenvalues keep their sign (saddles are converged to and then
        // diagnosed by the positive-definiteness check above); magnitudes are
        // clamped from below so the near-flat axial direction of a pure-RF
        // trap cannot blow the step up.
        const Eigen::Matrix3d H = total_hessian(layout, drive, ion, x);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
        const double lmag = es.eigenvalues().cwiseAbs().maxCoeff();
        if (!(lmag > 0.0))
            throw UnstablePoint("no curvature anywhere along the search path");
        const double lfloor = 1e-9 * lmag;
        Eigen::Vector3d step = Eigen::Vector3d::Zero();
        for (int i = 0; i < 3; ++i) {
            const Eigen::Vector3d v = es.eigenvectors().col(i);
            double lam = es.eigenvalues()(i);
            if (std::abs(lam) < lfloor) lam = lam < 0.0 ? -lfloor : lfloor;
            step -= (g.dot(v) / lam) * v;
        }
        // Never step more than a quarter of the current height.
        const double max_step = 0.25 * x.z();
        if (step.norm() > max_step) step *= max_step / step.norm();

        // Backtracking on the force magnitude.
        const double g0 = g.norm();
        double alpha = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            const Eigen::Vector3d trial = x + alpha * step;
            if (trial.z() > 0.0 &&
                total_gradient(layout, drive, ion, trial).norm() < g0) {
                x = trial;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved)
            throw NonConvergence("find_equilibrium: cannot reduce the force");
    }
    throw NonConvergence("find_equilibrium: no convergence after " +
                         std::to_string(kMaxIter) + " iterations");
}

namespace {

// Angle between a (sign-free) direction and the surface plane, in [0, 90].
double plane_angle_deg(const Eigen::Vector3d& v)
{
    const double in_plane = std::hypot(v.x(), v.y());
    return rad_to_deg(std::atan2(std::abs(v.z()), in_plane));
}

} // namespace

ModeSet normal_modes(const TrapLayout& layout, const DrivePoint& drive,
                     const IonSpecies& ion, const EquilibriumPoint& eq)
{
    const Eigen::Matrix3d H = total_hessian(layout, drive, ion, eq.position);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
    const Eigen::Vector3d lam = es.eigenvalues();
    if (lam.minCoeff() < -1e-9 * std::abs(lam.maxCoeff()))
        throw UnstablePoint("negative curvature at equilibrium");

    // omega_k = sqrt(lambda_k / m); lambda here is d2U/dx2 so the harmonic
    // term is (1/2) lambda x^2 = (1/2) m omega^2 x^2.
    std::array<double, 3> freq;
    std::array<Eigen::Vector3d, 3> vec;
    for (int i = 0; i < 3; ++i) {
        freq[i] = std::sqrt(std::max(lam(i), 0.0) / ion.mass);
        vec[i] = es.eigenvectors().col(i);
    }

    int axial = 0;
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
        const double ax = std::abs(vec[i].x());
        if (ax > best) { best = ax; axial = i; }
    }
    int r1 = (axial + 1) % 3, r2 = (axial + 2) % 3;

    // Degenerate radial pair: orient within the eigenplane by the static-only
    // Hessian so the labeling is deterministic.
    if (std::abs(lam(r1) - lam(r2)) <=
        1e-9 * std::max(std::abs(lam(r1)), std::abs(lam(r2)))) {
        DrivePoint static_only = drive;
        static_only.rf_amplitude = 0.0;
        const Eigen::Matrix3d Hs =
            ion.charge * (static_derivs(layout, static_only, eq.position, 2).hess);
        Eigen::Matrix2d Hp;
        const Eigen::Vector3d a = vec[r1], b = vec[r2];
        Hp << a.dot(Hs * a), a.dot(Hs * b),
              b.dot(Hs * a), b.dot(Hs * b);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es2(Hp);
        const Eigen::Vector2d c0 = es2.eigenvectors().col(0);
        const Eigen::Vector2d c1 = es2.eigenvectors().col(1);
        const Eigen::Vector3d v1 = c0(0) * a + c0(1) * b;
        const Eigen::Vector3d v2 = c1(0) * a + c1(1) * b;
        vec[r1] = v1.normalized();
        vec[r2] = v2.normalized();
    }

    const double a1 = plane_angle_deg(vec[r1]);
    const double a2 = plane_angle_deg(vec[r2]);
    int horiz, vert;
    if (std::abs(a1 - a2) < 1e-12) {
        horiz = freq[r1] <= freq[r2] ? r1 : r2;   // tie -> lower frequency
    } else {
        horiz = a1 < a2 ? r1 : r2;
    }
    vert = (horiz == r1) ? r2 : r1;

    ModeSet m;
    m.frequencies = {freq[axial], freq[horiz], freq[vert]};
    m.vectors = {vec[axial], vec[horiz], vec[vert]};
    return m;
}

double mode_angle(const ModeSet& modes)
{
    const Eigen::Vector3d& e = modes.horizontal_vector();
    double a = rad_to_deg(std::atan2(e.z(), e.y()));
    if (a >= 90.0) a -= 180.0;
    if (a < -90.0) a += 180.0;
    return a;
}

double center_field_angle(const TrapLayout& layout, const Eigen::Vector3d& p)
{
    const Eigen::Vector3d E = unit_field(layout.center_electrode(), p);
    return rad_to_deg(std::atan2(std::hypot(E.x(), E.y()), E.z()));
}

Eigen::Vector3d initial_null_guess(const TrapLayout& layout)
{
    // Scan the vertical above the center electrode for the weakest per-volt
    // RF field; this lands below the escape saddle, inside the basin the
    // equilibrium search descends into.
    const RectElectrode& c = layout.center_electrode();
    const double cx = 0.5 * (c.x_min + c.x_max);
    const double cy = 0.5 * (c.y_min + c.y_max);
    const double w = c.width_y();
    constexpr int n = 160;
    std::array<double, n + 1> mag{};
    std::array<double, n + 1> zs{};
    for (int i = 0; i <= n; ++i) {
        zs[i] = w * std::pow(10.0, -1.3 + 1.8 * i / n);
        mag[i] = rf_unit_field(layout, {cx, cy, zs[i]}).norm();
    }
    // Interior local minima only; the field also decays monotonically far
    // above the saddle, which is not a trap.
    double best_z = w;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 1; i < n; ++i) {
        if (mag[i] <= mag[i - 1] && mag[i] <= mag[i + 1] && mag[i] < best) {
            best = mag[i];
            best_z = zs[i];
        }
    }
    return {cx, cy, best_z};
}

} // namespace trapnoise
