#include "trapnoise/multipole.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "trapnoise/errors.hpp"

namespace trapnoise {

double MultipoleBasis::evaluate(int i, const Eigen::Vector3d& r) const
{
    const Eigen::Vector3d s = (r - center) / scale;
    switch (i) {
    case kY0: return 2.0 * s.x() * s.x() - s.y() * s.y() - s.z() * s.z();
    case kY1: return s.y() * s.y() - s.z() * s.z();
    case kY2: return s.y() * s.z();
    case kDx: return s.x();
    case kDy: return s.y();
    case kDz: return s.z();
    }
    throw DomainError("basis index out of range");
}

const char* MultipoleBasis::name(int i)
{
    static const char* names[] = {"Y0", "Y1", "Y2", "x", "y", "z"};
    return names[i];
}

int MultipoleMatrix::column(const std::string& name) const
{
    for (std::size_t k = 0; k < electrode_names.size(); ++k)
        if (electrode_names[k] == name) return static_cast<int>(k);
    throw ValidationError("electrode '" + name + "' not in multipole matrix");
}

MultipoleMatrix expand(const TrapLayout& layout, const Eigen::Vector3d& center,
                       double scale)
{
    if (!(center.z() > 0.0))
        throw DomainError("expansion center must lie above the plane");
    if (!(scale > 0.0))
        throw DomainError("expansion scale must be positive");

    MultipoleMatrix m;
    m.basis.center = center;
    m.basis.scale = scale;

    const auto electrodes = layout.dc_controllable();
    m.coefficients.resize(MultipoleBasis::kSize,
                          static_cast<Eigen::Index>(electrodes.size()));
    m.electrode_names.reserve(electrodes.size());

    for (std::size_t k = 0; k < electrodes.size(); ++k) {
        const RectElectrode& e = *electrodes[k];
        m.electrode_names.push_back(e.name);
        const Eigen::Vector3d g = -unit_field(e, center);  // grad phi
        const Eigen::Matrix3d H = unit_hessian(e, center);

        // Quadratic part (s^2/2) r'^T H r' decomposed on the traceless forms
        // of Y0, Y1, Y2. The diagonal forms are Frobenius-orthogonal; the
        // xy/xz shear content is outside the basis and left unrepresented.
        const double s2h = 0.5 * scale * scale;
        const double mxx = s2h * H(0, 0), myy = s2h * H(1, 1), mzz = s2h * H(2, 2);
        const double myz = s2h * H(1, 2);
        auto& C = m.coefficients;
        const auto col = static_cast<Eigen::Index>(k);
        C(MultipoleBasis::kY0, col) = (2.0 * mxx - myy - mzz) / 6.0;
        C(MultipoleBasis::kY1, col) = 0.5 * (myy - mzz);
        C(MultipoleBasis::kY2, col) = 2.0 * myz;
        C(MultipoleBasis::kDx, col) = scale * g.x();
        C(MultipoleBasis::kDy, col) = scale * g.y();
        C(MultipoleBasis::kDz, col) = scale * g.z();
    }
    return m;
}

VoltageSet solve_voltages(const MultipoleMatrix& m, const Eigen::VectorXd& target)
{
    if (target.size() != MultipoleBasis::kSize)
        throw DomainError("target dimension must equal basis size");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        m.coefficients, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const Eigen::VectorXd v = svd.solve(target);

    VoltageSet out;
    out.achieved_multipoles = m.coefficients * v;
    const double tnorm = target.norm();
    const double rnorm = (out.achieved_multipoles - target).norm();
    out.residual = tnorm > 0.0 ? rnorm / tnorm : rnorm;
    out.rank_warning = tnorm > 0.0 && out.residual > 1e-3;
    for (std::size_t k = 0; k < m.electrode_names.size(); ++k)
        out.volts[m.electrode_names[k]] = v(static_cast<Eigen::Index>(k));
    return out;
}

VoltageSet rotation_voltages(const MultipoleMatrix& m, double phi_deg,
                             double curvature, double axial_curvature,
                             double min_curvature)
{
    if (!(curvature >= min_curvature))
        throw DomainError("rotation curvature below the stray-field floor");

    // Physical curvature C (V/m^2) on a scaled basis function quadratic in
    // r' = r/scale corresponds to a coefficient C * scale^2. The rotated
    // quadrupole is cos(2 phi) (y^2 - z^2) + sin(2 phi) 2 y z; with the
    // basis function Y2 = y z the second coefficient carries the factor 2.
    const double s2 = m.basis.scale * m.basis.scale;
    const double two_phi = 2.0 * deg_to_rad(phi_deg);
    Eigen::VectorXd target = Eigen::VectorXd::Zero(MultipoleBasis::kSize);
    target(MultipoleBasis::kY0) = axial_curvature * s2;
    target(MultipoleBasis::kY1) = curvature * std::cos(two_phi) * s2;
    target(MultipoleBasis::kY2) = 2.0 * curvature * std::sin(two_phi) * s2;
    return solve_voltages(m, target);
}

ModeSet rf_bias_rotation(const TrapLayout& layout, const DrivePoint& drive,
                         const IonSpecies& ion, double bias)
{
    if (!(bias < 0.0))
        throw DomainError("rf bias must be negative");
    DrivePoint biased = drive;
    biased.rf_bias = bias;
    // The bias exerts no force at the RF null (the static rail field is
    // proportional to the vanishing per-volt RF field), so the unbiased null
    // is the natural starting guess.
    const EquilibriumPoint eq0 = find_equilibrium(
        layout, drive, ion, initial_null_guess(layout));
    const EquilibriumPoint eq = find_equilibrium(layout, biased, ion, eq0.position);
    return normal_modes(layout, biased, ion, eq);
}

} // namespace trapnoise
