// Command-line front end: simulate ratio curves, report trap modes, solve
// control voltages, fit measured heating data, extract the surface-noise
// magnitude. Machine-readable output: CSV for plot data, JSON for reports.
//
// Exit codes: 0 ok, 2 input/validation error, 3 numerical failure,
// 4 insufficient data.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trapnoise/constants.hpp"
#include "trapnoise/disentangle.hpp"
#include "trapnoise/fields.hpp"
#include "trapnoise/geometry.hpp"
#include "trapnoise/heating.hpp"
#include "trapnoise/multipole.hpp"
#include "trapnoise/noise_models.hpp"
#include "trapnoise/version.hpp"

namespace fs = std::filesystem;
using namespace trapnoise;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitData = 4;

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 0xcbf29ce484222325ull)
{
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// All inputs that went into a run, hashed into the output header so results
// can be traced back to their configuration.
struct InputTracker {
    std::uint64_t hash = 0xcbf29ce484222325ull;

    void add(const std::string& tag, const std::string& content)
    {
        hash = fnv1a(tag, hash);
        hash = fnv1a(content, hash);
    }
    std::string hex() const
    {
        char buf[20];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(hash));
        return buf;
    }
};

void write_atomic(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ParseError("cannot write '" + tmp.string() + "'");
        out << content;
    }
    fs::rename(tmp, path);
}

fs::path data_dir()
{
    if (const char* env = std::getenv("TRAPNOISE_DATA_DIR")) return env;
    return TRAPNOISE_SOURCE_DATA_DIR;
}

struct GlobalOptions {
    std::string layout_path;
    std::string ion_name = "ca40";
    double ion_mass_amu = 0.0;   // overrides ion_name when > 0
    int ion_charge = 1;
    std::string units = "lab";
    std::string out_dir = ".";
    double rf_amplitude = kReferenceRfAmplitude;
    double rf_frequency_in = 32.0;  // MHz in lab units, rad/s in si
    double rf_bias = 0.0;

    TrapLayout layout(InputTracker& t) const
    {
        if (layout_path.empty()) {
            TrapLayout l = reference_layout();
            t.add("layout", serialize_layout(l));
            return l;
        }
        const std::string content = read_file(layout_path);
        t.add("layout", content);
        return parse_layout(content);
    }

    IonSpecies ion() const
    {
        if (ion_mass_amu > 0.0)
            return IonSpecies::from_amu(ion_mass_amu, ion_charge);
        if (ion_name == "ca40") return IonSpecies::calcium40();
        if (ion_name == "be9") return IonSpecies::from_amu(9.012182);
        if (ion_name == "mg24") return IonSpecies::from_amu(23.985042);
        if (ion_name == "sr88") return IonSpecies::from_amu(87.905612);
        if (ion_name == "yb171") return IonSpecies::from_amu(170.936323);
        throw ValidationError("unknown ion '" + ion_name +
                              "'; use --ion-mass-amu for other species");
    }

    double rf_frequency() const
    {
        return units == "si" ? rf_frequency_in : 2.0 * kPi * rf_frequency_in * 1e6;
    }

    double length_to_m(double v) const { return units == "si" ? v : v * 1e-6; }
    double mode_freq_to_rads(double v) const
    {
        return units == "si" ? v : 2.0 * kPi * v * 1e6;
    }

    DrivePoint drive() const
    {
        DrivePoint d;
        d.rf_amplitude = rf_amplitude;
        d.rf_frequency = rf_frequency();
        d.rf_bias = rf_bias;
        return d;
    }
};

std::string output_header(const InputTracker& t)
{
    return std::string("# trapnoise ") + kVersion + " inputs_fnv1a=" + t.hex() + "\n";
}

std::map<std::string, double> load_voltage_csv(const fs::path& p, InputTracker& t)
{
    const std::string content = read_file(p);
    t.add("voltages", content);
    std::map<std::string, double> v;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (line.find("name") == 0) continue;  // header
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("voltage file line " + std::to_string(lineno) +
                             ": expected 'name,volts'");
        const std::string name = line.substr(0, comma);
        try {
            v[name] = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw ParseError("voltage file line " + std::to_string(lineno) +
                             ": bad number");
        }
    }
    if (v.empty()) throw ParseError("voltage file '" + p.string() + "' is empty");
    return v;
}

EquilibriumPoint solve_equilibrium(const TrapLayout& layout, const DrivePoint& d,
                                   const IonSpecies& ion)
{
    return find_equilibrium(layout, d, ion, initial_null_guess(layout));
}

// ---- curve ------------------------------------------------------------------

struct CurveOptions {
    std::string model;
    double xi_in = 100.0;       // um (lab) / m (si)
    double height_in = 0.0;     // 0: use the layout equilibrium
    std::string voltages_path;  // dep model input
    double start = 0.0, stop = 90.0, step = 1.0;
    std::string out;
};

int cmd_curve(const GlobalOptions& g, const CurveOptions& o)
{
    InputTracker tracker;
    const TrapLayout layout = g.layout(tracker);
    const IonSpecies ion = g.ion();

    double height = g.length_to_m(o.height_in);
    Eigen::Vector3d pos;
    if (o.model == "patch" || o.model == "dipole") {
        if (height <= 0.0)
            height = solve_equilibrium(layout, g.drive(), ion).height_d;
    } else {
        pos = solve_equilibrium(layout, g.drive(), ion).position;
    }

    PsdTensor t;
    if (o.model == "patch") {
        t = patch_psd({height, g.length_to_m(o.xi_in)});
    } else if (o.model == "dipole") {
        t = dipole_psd(height);
    } else if (o.model == "indep") {
        t = technical_indep_psd(layout, pos);
    } else if (o.model == "dep") {
        if (o.voltages_path.empty())
            throw ValidationError("--model dep requires --voltages <csv>");
        t = technical_dep_psd(layout, load_voltage_csv(o.voltages_path, tracker), pos);
    } else if (o.model == "pickup") {
        t = pickup_psd(layout, pos);
    } else {
        throw ValidationError("unknown model '" + o.model + "'");
    }

    const RatioCurve c = ratio_curve(t, uniform_angle_grid(o.start, o.stop, o.step));
    std::ostringstream body;
    body << output_header(tracker);
    body << "# model=" << o.model << " max_ratio=" << c.max_ratio
         << " max_angle_deg=" << c.max_angle_deg << "\n";
    body << "angle_deg,ratio\n";
    body.precision(10);
    for (std::size_t i = 0; i < c.angles_deg.size(); ++i)
        body << c.angles_deg[i] << "," << c.ratios[i] << "\n";

    const fs::path out = o.out.empty()
                             ? fs::path(g.out_dir) / ("curve_" + o.model + ".csv")
                             : fs::path(o.out);
    write_atomic(out, body.str());
    std::cout << out.string() << "\n";
    return kExitOk;
}

// ---- modes ------------------------------------------------------------------

struct ModesOptions {
    std::string voltages_path;
    double angle = 0.0;
    double curvature = 0.0;  // V/m^2; > 0 generates a rotation set
    double axial_curvature = 0.0;
};

int cmd_modes(const GlobalOptions& g, const ModesOptions& o)
{
    InputTracker tracker;
    const TrapLayout layout = g.layout(tracker);
    const IonSpecies ion = g.ion();
    DrivePoint d = g.drive();

    EquilibriumPoint eq = solve_equilibrium(layout, d, ion);
    if (!o.voltages_path.empty()) {
        d.dc_voltages = load_voltage_csv(o.voltages_path, tracker);
    } else if (o.curvature > 0.0) {
        const MultipoleMatrix m = expand(layout, eq.position, eq.height_d);
        const double c0 = o.axial_curvature > 0.0
                              ? o.axial_curvature
                              : ion.mass * std::pow(2 * kPi * 1e6, 2) /
                                    (4.0 * ion.charge);
        d.dc_voltages = rotation_voltages(m, o.angle, o.curvature, c0).volts;
    }
    eq = find_equilibrium(layout, d, ion, eq.position);
    const ModeSet m = normal_modes(layout, d, ion, eq);

    std::cout << output_header(tracker);
    std::cout.precision(6);
    std::cout << "equilibrium_um: " << eq.position.x() * 1e6 << " "
              << eq.position.y() * 1e6 << " " << eq.position.z() * 1e6 << "\n";
    std::cout << "height_um: " << eq.height_d * 1e6 << "\n";
    std::cout << "freq_axial_MHz: " << m.axial_frequency() / (2 * kPi * 1e6) << "\n";
    std::cout << "freq_horizontal_MHz: "
              << m.horizontal_frequency() / (2 * kPi * 1e6) << "\n";
    std::cout << "freq_vertical_MHz: " << m.vertical_frequency() / (2 * kPi * 1e6)
              << "\n";
    std::cout << "mode_angle_deg: " << mode_angle(m) << "\n";
    std::cout << "center_field_angle_deg: "
              << center_field_angle(layout, eq.position) << "\n";
    return kExitOk;
}

// ---- voltages ---------------------------------------------------------------

struct VoltagesOptions {
    double angle = 0.0;
    double curvature = 3.0e6;
    double axial_curvature = 0.0;
    std::string sweep_path;
    std::string out;
};

int cmd_voltages(const GlobalOptions& g, const VoltagesOptions& o)
{
    InputTracker tracker;
    const TrapLayout layout = g.layout(tracker);
    const IonSpecies ion = g.ion();

    const EquilibriumPoint eq = solve_equilibrium(layout, g.drive(), ion);
    const MultipoleMatrix m = expand(layout, eq.position, eq.height_d);
    const double c0 = o.axial_curvature > 0.0
                          ? o.axial_curvature
                          : ion.mass * std::pow(2 * kPi * 1e6, 2) / (4.0 * ion.charge);

    std::vector<double> angles;
    if (!o.sweep_path.empty()) {
        const std::string content = read_file(o.sweep_path);
        tracker.add("sweep", content);
        std::istringstream in(content);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            try {
                angles.push_back(std::stod(line));
            } catch (const std::exception&) {
                throw ParseError("sweep file: bad angle '" + line + "'");
            }
        }
        if (angles.empty()) throw ParseError("sweep file has no angles");
    } else {
        angles.push_back(o.angle);
    }

    std::ostringstream body;
    body << output_header(tracker);
    body << "# curvature_V_per_m2=" << o.curvature
         << " axial_curvature_V_per_m2=" << c0 << "\n";
    const bool sweep = angles.size() > 1;
    body << (sweep ? "angle_deg,name,volts\n" : "name,volts\n");
    body.precision(12);
    bool warned = false;
    for (double a : angles) {
        const VoltageSet vs = rotation_voltages(m, a, o.curvature, c0);
        warned = warned || vs.rank_warning;
        for (const auto& [name, v] : vs.volts) {
            if (sweep) body << a << ",";
            body << name << "," << v << "\n";
        }
    }
    if (warned)
        std::cerr << "warning: target multipoles not fully reachable\n";

    const fs::path out = o.out.empty() ? fs::path(g.out_dir) / "voltages.csv"
                                       : fs::path(o.out);
    write_atomic(out, body.str());
    std::cout << out.string() << "\n";
    return kExitOk;
}

// ---- fit --------------------------------------------------------------------

struct FitOptions {
    std::string data_path;
    std::string out;
};

int cmd_fit(const GlobalOptions& g, const FitOptions& o)
{
    InputTracker tracker;
    const IonSpecies ion = g.ion();
    const fs::path path = o.data_path.empty()
                              ? data_dir() / "paper_measurements.csv"
                              : fs::path(o.data_path);
    tracker.add("measurements", read_file(path));
    const auto data = load_measurements(path);
    const AngleModelFit fit = fit_angle_model(data, ion);

    ordered_json j;
    j["tool"] = std::string("trapnoise ") + kVersion;
    j["inputs_fnv1a"] = tracker.hex();
    j["n_measurements"] = data.size();
    j["s_max"] = fit.s_max;
    j["s_min"] = fit.s_min;
    j["phi_max_deg"] = fit.phi_max_deg;
    j["sigma_s_max"] = fit.sigma_s_max();
    j["sigma_s_min"] = fit.sigma_s_min();
    j["sigma_phi_max_deg"] = fit.sigma_phi_max();
    j["ratio_at_peak"] = fit.s_min > 0.0 ? fit.s_max / fit.s_min : 0.0;
    j["negative_smin_warning"] = fit.negative_smin_warning;
    ordered_json cov = ordered_json::array();
    for (int r = 0; r < 3; ++r)
        cov.push_back({fit.covariance(r, 0), fit.covariance(r, 1),
                       fit.covariance(r, 2)});
    j["covariance"] = cov;

    ordered_json residuals = ordered_json::array();
    for (const auto& mrec : data) {
        const AnglePsd s =
            angle_model(fit.s_max, std::max(fit.s_min, 0.0), fit.phi_max_deg,
                        mrec.angle_deg);
        ordered_json r;
        r["angle_deg"] = mrec.angle_deg;
        r["rate_h_model"] = rate_from_psd(s.s_h, ion, mrec.mode_frequency) / 1e3;
        r["rate_h_measured"] = mrec.rate_h;
        r["rate_v_model"] = rate_from_psd(s.s_v, ion, mrec.mode_frequency) / 1e3;
        r["rate_v_measured"] = mrec.rate_v;
        residuals.push_back(r);
    }
    j["per_point"] = residuals;

    const std::string text = j.dump(2) + "\n";
    if (o.out.empty()) {
        std::cout << text;
    } else {
        write_atomic(o.out, text);
        std::cout << o.out << "\n";
    }
    return kExitOk;
}

// ---- extract ----------------------------------------------------------------

struct ExtractOptions {
    double ratio = 0.0;
    double ratio_sigma = 0.0;
    double rate_h = 0.0;        // quanta/ms
    double rate_h_sigma = 0.0;
    double mode_freq_in = 2.6;  // MHz (lab) or rad/s (si)
    double angle = -1.0;        // < 0: use the layout's center-field angle
    double technical_ratio = 0.0;  // <= 0: evaluate the model
    double surface_ratio = 2.0;
    std::string out;
};

int cmd_extract(const GlobalOptions& g, const ExtractOptions& o)
{
    InputTracker tracker;
    const TrapLayout layout = g.layout(tracker);
    const IonSpecies ion = g.ion();

    if (o.ratio <= 0.0 || o.ratio_sigma <= 0.0 || o.rate_h < 0.0 ||
        o.rate_h_sigma <= 0.0)
        throw ValidationError(
            "extract requires --ratio, --ratio-sigma, --rate-h, --rate-h-sigma");

    DisentangleInput in;
    in.r_tot = {o.ratio, o.ratio_sigma};
    in.r_surf = o.surface_ratio;

    double phi = o.angle;
    double r_techn = o.technical_ratio;
    if (phi < 0.0 || r_techn <= 0.0) {
        const EquilibriumPoint eq = solve_equilibrium(layout, g.drive(), ion);
        if (phi < 0.0) phi = center_field_angle(layout, eq.position);
        if (r_techn <= 0.0)
            r_techn = technical_ratio_at(layout, g.drive(), ion, phi);
    }
    in.phi_deg = phi;
    in.r_techn = r_techn;

    const double omega = g.mode_freq_to_rads(o.mode_freq_in);
    const double s = psd_from_rate(o.rate_h * 1e3, ion, omega);
    in.s_tot_h = {s, s * o.rate_h_sigma / o.rate_h};

    const SurfaceEstimate est = extract_surface(in);

    ordered_json j;
    j["tool"] = std::string("trapnoise ") + kVersion;
    j["inputs_fnv1a"] = tracker.hex();
    j["angle_deg"] = in.phi_deg;
    j["technical_ratio"] = in.r_techn;
    j["surface_ratio"] = in.r_surf;
    j["s_tot_h"] = in.s_tot_h.value;
    j["s_surf_h"] = est.s_surf_h.value;
    j["s_surf_h_sigma"] = est.s_surf_h.sigma;
    j["s_surf_x"] = est.s_surf_x.value;
    j["s_surf_x_sigma"] = est.s_surf_x.sigma;
    j["surface_fraction"] = est.surface_fraction.value;
    j["surface_fraction_sigma"] = est.surface_fraction.sigma;
    j["unphysical_fraction_warning"] = est.unphysical_fraction_warning;

    const std::string text = j.dump(2) + "\n";
    if (o.out.empty()) {
        std::cout << text;
    } else {
        write_atomic(o.out, text);
        std::cout << o.out << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Directional electric-field-noise analysis for planar ion traps"};
    app.set_version_flag("--version", std::string("trapnoise ") + kVersion);
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--layout", g.layout_path,
                   "Layout JSON (default: bundled reference layout)");
    app.add_option("--ion", g.ion_name, "Ion species (default ca40)");
    app.add_option("--ion-mass-amu", g.ion_mass_amu, "Custom ion mass in amu");
    app.add_option("--ion-charge", g.ion_charge, "Ion charge in units of e");
    app.add_option("--units", g.units, "Input units: lab (um/MHz, default) or si")
        ->check(CLI::IsMember({"lab", "si"}));
    app.add_option("--out-dir", g.out_dir, "Directory for output files");
    app.add_option("--rf-amplitude", g.rf_amplitude, "RF amplitude, V zero-to-peak");
    app.add_option("--rf-freq", g.rf_frequency_in,
                   "RF drive frequency (MHz in lab units, rad/s in si)");
    app.add_option("--rf-bias", g.rf_bias, "Static bias on the RF rails, V");

    CurveOptions co;
    auto* curve = app.add_subcommand("curve", "Heating-rate ratio versus mode angle");
    curve->add_option("--model", co.model,
                      "Noise model: patch|dipole|indep|dep|pickup")->required();
    curve->add_option("--xi", co.xi_in, "Patch correlation length (um)");
    curve->add_option("--height", co.height_in,
                      "Ion-surface distance (um); default from the layout");
    curve->add_option("--voltages", co.voltages_path, "Voltage CSV for --model dep");
    curve->add_option("--grid-start", co.start, "First angle, deg");
    curve->add_option("--grid-stop", co.stop, "Last angle, deg");
    curve->add_option("--grid-step", co.step, "Angle step, deg");
    curve->add_option("--out", co.out, "Output CSV path");

    ModesOptions mo;
    auto* modes = app.add_subcommand("modes", "Equilibrium and normal-mode report");
    modes->add_option("--voltages", mo.voltages_path, "Voltage CSV (name,volts)");
    modes->add_option("--angle", mo.angle, "Rotation angle for a generated set, deg");
    modes->add_option("--curvature", mo.curvature,
                      "Radial curvature (V/m^2) to generate a rotation set");
    modes->add_option("--axial-curvature", mo.axial_curvature,
                      "Axial curvature (V/m^2, default: 1 MHz axial)");

    VoltagesOptions vo;
    auto* voltages =
        app.add_subcommand("voltages", "Solve electrode voltages for a mode angle");
    voltages->add_option("--angle", vo.angle, "Target mode angle, deg");
    voltages->add_option("--curvature", vo.curvature, "Radial curvature, V/m^2");
    voltages->add_option("--axial-curvature", vo.axial_curvature,
                         "Axial curvature, V/m^2 (default: 1 MHz axial)");
    voltages->add_option("--sweep", vo.sweep_path,
                         "File with one angle per line; emits one set per angle");
    voltages->add_option("--out", vo.out, "Output CSV path");

    FitOptions fo;
    auto* fit = app.add_subcommand("fit", "Fit the two-mode angle model");
    fit->add_option("data", fo.data_path,
                    "Measurement CSV (default: bundled dataset)");
    fit->add_option("--out", fo.out, "Write the JSON report here");

    ExtractOptions eo;
    auto* extract =
        app.add_subcommand("extract", "Surface-noise magnitude from a measured ratio");
    extract->add_option("--ratio", eo.ratio, "Measured mode ratio")->required();
    extract->add_option("--ratio-sigma", eo.ratio_sigma, "1-sigma of the ratio")
        ->required();
    extract->add_option("--rate-h", eo.rate_h,
                        "In-plane heating rate, quanta/ms")->required();
    extract->add_option("--rate-h-sigma", eo.rate_h_sigma,
                        "1-sigma of the rate, quanta/ms")->required();
    extract->add_option("--mode-freq", eo.mode_freq_in,
                        "Mode frequency (MHz in lab units, rad/s in si)");
    extract->add_option("--angle", eo.angle,
                        "Measurement angle, deg (default: layout center-field angle)");
    extract->add_option("--technical-ratio", eo.technical_ratio,
                        "Technical-model ratio (default: computed from the layout)");
    extract->add_option("--surface-ratio", eo.surface_ratio,
                        "Surface-model polarization ratio");
    extract->add_option("--out", eo.out, "Write the JSON report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (curve->parsed()) return cmd_curve(g, co);
        if (modes->parsed()) return cmd_modes(g, mo);
        if (voltages->parsed()) return cmd_voltages(g, vo);
        if (fit->parsed()) return cmd_fit(g, fo);
        if (extract->parsed()) return cmd_extract(g, eo);
    } catch (const InsufficientData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        // NonConvergence, UnstablePoint, QuadratureFailure, degenerate cases.
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitInput;
}
