#include "trapnoise/heating.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "trapnoise/errors.hpp"

namespace trapnoise {

double rate_from_psd(double s_dir, const IonSpecies& ion, double omega)
{
    if (!(omega > 0.0))
        throw DomainError("mode frequency must be positive");
    return ion.charge * ion.charge * s_dir / (4.0 * ion.mass * kHbar * omega);
}

double psd_from_rate(double rate, const IonSpecies& ion, double omega)
{
    if (!(omega > 0.0))
        throw DomainError("mode frequency must be positive");
    return rate * 4.0 * ion.mass * kHbar * omega / (ion.charge * ion.charge);
}

AnglePsd angle_model(double s_max, double s_min, double phi_max_deg,
                     double phi_deg)
{
    if (!(s_max >= s_min) || !(s_min >= 0.0))
        throw DomainError("angle model requires s_max >= s_min >= 0");
    const double d = deg_to_rad(phi_deg - phi_max_deg);
    const double c2 = std::cos(d) * std::cos(d);
    const double s2 = std::sin(d) * std::sin(d);
    AnglePsd out;
    out.s_v = s_max * c2 + s_min * s2;
    out.s_h = s_max * s2 + s_min * c2;
    return out;
}

double AngleModelFit::sigma_s_max() const { return std::sqrt(covariance(0, 0)); }
double AngleModelFit::sigma_s_min() const { return std::sqrt(covariance(1, 1)); }
double AngleModelFit::sigma_phi_max() const { return std::sqrt(covariance(2, 2)); }

AngleModelFit fit_angle_model(const std::vector<HeatingMeasurement>& data,
                              const IonSpecies& ion)
{
    if (data.size() < 3)
        throw InsufficientData("need at least 3 measurements");
    std::set<long long> distinct;
    for (const auto& m : data)
        distinct.insert(llround(m.angle_deg * 1e6));
    if (distinct.size() < 3)
        throw InsufficientData("need measurements at >= 3 distinct angles");

    // Rows: per measurement, S_vert = A + B c + C s and S_horiz = A - B c - C s
    // with c = cos 2 phi, s = sin 2 phi. Rates arrive in quanta/ms.
    const int n = static_cast<int>(data.size());
    Eigen::MatrixXd X(2 * n, 3);
    Eigen::VectorXd y(2 * n), w(2 * n);
    for (int i = 0; i < n; ++i) {
        const auto& m = data[i];
        if (!(m.sigma_h > 0.0) || !(m.sigma_v > 0.0))
            throw DomainError("measurement uncertainties must be positive");
        if (m.rate_h < 0.0 || m.rate_v < 0.0)
            throw DomainError("heating rates must be non-negative");
        const double c = std::cos(2.0 * deg_to_rad(m.angle_deg));
        const double s = std::sin(2.0 * deg_to_rad(m.angle_deg));
        const double to_psd = psd_from_rate(1.0, ion, m.mode_frequency) * 1e3;
        X.row(2 * i) << 1.0, c, s;
        y(2 * i) = m.rate_v * to_psd;
        w(2 * i) = 1.0 / (m.sigma_v * to_psd);
        X.row(2 * i + 1) << 1.0, -c, -s;
        y(2 * i + 1) = m.rate_h * to_psd;
        w(2 * i + 1) = 1.0 / (m.sigma_h * to_psd);
    }
    const Eigen::MatrixXd Xw = w.asDiagonal() * X;
    const Eigen::VectorXd yw = w.asDiagonal() * y;
    const Eigen::Vector3d abc = Xw.colPivHouseholderQr().solve(yw);
    const Eigen::Matrix3d normal = Xw.transpose() * Xw;
    const Eigen::Matrix3d cov_abc = normal.inverse();

    const double A = abc(0), B = abc(1), C = abc(2);
    const double r = std::hypot(B, C);

    AngleModelFit fit;
    fit.s_max = A + r;
    fit.s_min = A - r;
    double phi = 0.5 * rad_to_deg(std::atan2(C, B));
    if (phi < 0.0) phi += 180.0;
    if (phi >= 180.0) phi -= 180.0;
    fit.phi_max_deg = phi;

    // Delta-method propagation to (s_max, s_min, phi_max_deg).
    Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
    if (r > 0.0) {
        J.row(0) << 1.0, B / r, C / r;
        J.row(1) << 1.0, -B / r, -C / r;
        const double f = 0.5 * (180.0 / kPi) / (r * r);
        J.row(2) << 0.0, -C * f, B * f;
    } else {
        J.row(0) << 1.0, 0.0, 0.0;
        J.row(1) << 1.0, 0.0, 0.0;
    }
    fit.covariance = J * cov_abc * J.transpose();
    fit.negative_smin_warning = fit.s_min < -2.0 * fit.sigma_s_min();
    return fit;
}

ValueWithSigma voltage_scaling_factor(double rate_i, double sigma_i,
                                      double rate_ii, double sigma_ii)
{
    if (!(rate_i > 0.0) || !(rate_ii > 0.0))
        throw DomainError("rates must be positive");
    ValueWithSigma out;
    out.value = rate_i / rate_ii;
    const double ri = sigma_i / rate_i;
    const double rii = sigma_ii / rate_ii;
    out.sigma = out.value * std::sqrt(ri * ri + rii * rii);
    return out;
}

double voltage_scaling_model_prediction(double factor)
{
    return factor * factor;
}

std::vector<HeatingMeasurement> load_measurements(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open measurement file '" + path.string() + "'");
    std::vector<HeatingMeasurement> out;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen && line.find("angle_deg") != std::string::npos) {
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string tok;
        double vals[6];
        for (int i = 0; i < 6; ++i) {
            if (!std::getline(ss, tok, ','))
                throw ParseError("measurement line " + std::to_string(lineno) +
                                 ": expected 6 comma-separated fields");
            try {
                vals[i] = std::stod(tok);
            } catch (const std::exception&) {
                throw ParseError("measurement line " + std::to_string(lineno) +
                                 ": bad number '" + tok + "'");
            }
        }
        HeatingMeasurement m;
        m.angle_deg = vals[0];
        m.rate_h = vals[1];
        m.sigma_h = vals[2];
        m.rate_v = vals[3];
        m.sigma_v = vals[4];
        m.mode_frequency = 2.0 * kPi * vals[5] * 1e6;
        if (m.rate_h < 0.0 || m.rate_v < 0.0 || m.sigma_h <= 0.0 ||
            m.sigma_v <= 0.0 || m.mode_frequency <= 0.0)
            throw ParseError("measurement line " + std::to_string(lineno) +
                             ": values violate schema constraints");
        out.push_back(m);
    }
    return out;
}

} // namespace trapnoise
