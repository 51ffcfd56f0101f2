#include "trapnoise/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace trapnoise {

using ordered_json = nlohmann::ordered_json;

std::string to_string(ElectrodeRole role)
{
    switch (role) {
    case ElectrodeRole::RF: return "RF";
    case ElectrodeRole::DC: return "DC";
    case ElectrodeRole::CENTER: return "CENTER";
    case ElectrodeRole::GROUND: return "GROUND";
    }
    return "DC";
}

ElectrodeRole role_from_string(std::string_view s)
{
    if (s == "RF") return ElectrodeRole::RF;
    if (s == "DC") return ElectrodeRole::DC;
    if (s == "CENTER") return ElectrodeRole::CENTER;
    if (s == "GROUND") return ElectrodeRole::GROUND;
    throw ParseError("unknown electrode role '" + std::string(s) + "'");
}

const RectElectrode& TrapLayout::electrode(std::string_view ename) const
{
    for (const auto& e : electrodes)
        if (e.name == ename) return e;
    throw ValidationError("no electrode named '" + std::string(ename) + "'");
}

const RectElectrode& TrapLayout::center_electrode() const
{
    for (const auto& e : electrodes)
        if (e.role == ElectrodeRole::CENTER) return e;
    throw ValidationError("layout has no CENTER electrode");
}

bool TrapLayout::is_rf(std::string_view ename) const
{
    return std::find(rf_names.begin(), rf_names.end(), ename) != rf_names.end();
}

std::vector<const RectElectrode*> TrapLayout::non_ground() const
{
    std::vector<const RectElectrode*> out;
    for (const auto& e : electrodes)
        if (e.role != ElectrodeRole::GROUND) out.push_back(&e);
    return out;
}

std::vector<const RectElectrode*> TrapLayout::dc_controllable() const
{
    std::vector<const RectElectrode*> out;
    for (const auto& e : electrodes)
        if (e.role == ElectrodeRole::DC || e.role == ElectrodeRole::CENTER)
            out.push_back(&e);
    return out;
}

namespace {

bool interiors_overlap(const RectElectrode& a, const RectElectrode& b)
{
    return a.x_min < b.x_max && b.x_min < a.x_max &&
           a.y_min < b.y_max && b.y_min < a.y_max;
}

} // namespace

void TrapLayout::validate() const
{
    if (electrodes.empty())
        throw ValidationError("layout has no electrodes");
    std::size_t center_count = 0;
    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        const auto& e = electrodes[i];
        if (e.name.empty())
            throw ValidationError("electrode with empty name");
        if (!(e.x_max > e.x_min) || !(e.y_max > e.y_min))
            throw ValidationError("electrode '" + e.name + "' has empty extent");
        if (e.role == ElectrodeRole::CENTER) ++center_count;
        for (std::size_t j = i + 1; j < electrodes.size(); ++j) {
            if (electrodes[j].name == e.name)
                throw ValidationError("duplicate electrode name '" + e.name + "'");
            if (interiors_overlap(e, electrodes[j]))
                throw ValidationError("electrodes '" + e.name + "' and '" +
                                      electrodes[j].name + "' overlap");
        }
    }
    if (center_count != 1)
        throw ValidationError("layout must have exactly one CENTER electrode, got " +
                              std::to_string(center_count));
    if (rf_names.empty())
        throw ValidationError("rf_names is empty");
    for (const auto& n : rf_names) {
        bool found = false;
        for (const auto& e : electrodes)
            if (e.name == n) { found = true; break; }
        if (!found)
            throw ValidationError("rf name '" + n + "' is not an electrode");
    }
}

namespace {

constexpr double kMeterPerMicron = 1e-6;

// Quantize serialized micrometer values to 1e-9 um so that save/load/save
// reproduces the file byte for byte.
double um(double meters)
{
    return std::round(meters * 1e6 * 1e9) / 1e9;
}

} // namespace

std::string serialize_layout(const TrapLayout& layout)
{
    ordered_json j;
    j["schema"] = 1;
    j["unit"] = "um";
    j["name"] = layout.name;
    j["origin"] = {um(layout.convention.origin.x()),
                   um(layout.convention.origin.y()),
                   um(layout.convention.origin.z())};
    j["rf"] = layout.rf_names;
    ordered_json elist = ordered_json::array();
    for (const auto& e : layout.electrodes) {
        ordered_json je;
        je["name"] = e.name;
        je["role"] = to_string(e.role);
        je["x"] = {um(e.x_min), um(e.x_max)};
        je["y"] = {um(e.y_min), um(e.y_max)};
        elist.push_back(je);
    }
    j["electrodes"] = elist;
    return j.dump(2) + "\n";
}

TrapLayout parse_layout(const std::string& text)
{
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("layout JSON parse failure: ") + e.what());
    }
    TrapLayout layout;
    try {
        if (j.at("schema").get<int>() != 1)
            throw ParseError("unsupported layout schema version");
        if (j.at("unit").get<std::string>() != "um")
            throw ParseError("layout unit must be 'um'");
        layout.name = j.value("name", std::string());
        if (j.contains("origin")) {
            auto o = j.at("origin");
            layout.convention.origin = Eigen::Vector3d(
                o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()) *
                kMeterPerMicron;
        }
        layout.rf_names = j.at("rf").get<std::vector<std::string>>();
        for (const auto& je : j.at("electrodes")) {
            RectElectrode e;
            e.name = je.at("name").get<std::string>();
            e.role = role_from_string(je.at("role").get<std::string>());
            e.x_min = je.at("x").at(0).get<double>() * kMeterPerMicron;
            e.x_max = je.at("x").at(1).get<double>() * kMeterPerMicron;
            e.y_min = je.at("y").at(0).get<double>() * kMeterPerMicron;
            e.y_max = je.at("y").at(1).get<double>() * kMeterPerMicron;
            layout.electrodes.push_back(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("layout field error: ") + e.what());
    }
    layout.validate();
    return layout;
}

TrapLayout load_layout(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open layout file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_layout(ss.str());
}

void save_layout(const TrapLayout& layout, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot write layout file '" + path.string() + "'");
    out << serialize_layout(layout);
}

namespace {

RectElectrode rect(std::string name, double x0, double x1, double y0, double y1,
                   ElectrodeRole role)
{
    RectElectrode e;
    e.name = std::move(name);
    e.x_min = x0 * kMeterPerMicron;
    e.x_max = x1 * kMeterPerMicron;
    e.y_min = y0 * kMeterPerMicron;
    e.y_max = y1 * kMeterPerMicron;
    e.role = role;
    return e;
}

} // namespace

TrapLayout reference_layout()
{
    // Asymmetric five-wire stand-in. The rail widths (17.42 / 29.81 um) are
    // the frozen result of a two-parameter search: narrow rail on -y and wide
    // rail on +y around a 200 um center electrode put the RF null at
    // (y, z) = (-26.1, 107.0) um, where the center-electrode field points
    // 15.0 deg off the surface normal, tilted towards -y.
    //
    // The outer DC bands sit behind grounded strips; the bottom band was
    // brought in and widened until the summed field of all live electrodes
    // (the pickup direction) is within a few degrees of vertical. DC bands
    // are segmented along x, finer near x = 0 so that no single segment
    // rivals the center electrode in the voltage-independent noise sum.
    constexpr double kRailX = 2000.0;
    constexpr double kHalfCenter = 100.0;       // center electrode half-width
    constexpr double kNarrowRail = 17.42;       // calibrated
    constexpr double kWideRail = 29.81;         // calibrated
    constexpr double kBottomGap = 90.0;
    constexpr double kBottomBand = 900.0;
    constexpr double kTopGap = 450.0;
    constexpr double kTopBand = 350.0;
    const double seg_edges[] = {-2000.0, -1200.0, -700.0, -350.0, -120.0,
                                120.0,   350.0,   700.0,  1200.0, 2000.0};

    TrapLayout layout;
    layout.name = "reference-asymmetric-five-wire";
    layout.rf_names = {"rf_narrow", "rf_wide"};

    layout.electrodes.push_back(
        rect("center", -kRailX, kRailX, -kHalfCenter, kHalfCenter,
             ElectrodeRole::CENTER));
    layout.electrodes.push_back(
        rect("rf_narrow", -kRailX, kRailX, -kHalfCenter - kNarrowRail,
             -kHalfCenter, ElectrodeRole::RF));
    layout.electrodes.push_back(
        rect("rf_wide", -kRailX, kRailX, kHalfCenter,
             kHalfCenter + kWideRail, ElectrodeRole::RF));

    const double yb1 = -kHalfCenter - kNarrowRail - kBottomGap;
    const double yb0 = yb1 - kBottomBand;
    const double yt0 = kHalfCenter + kWideRail + kTopGap;
    const double yt1 = yt0 + kTopBand;
    for (int k = 0; k + 1 < static_cast<int>(std::size(seg_edges)); ++k) {
        layout.electrodes.push_back(rect("dc_s" + std::to_string(k + 1),
                                         seg_edges[k], seg_edges[k + 1], yb0,
                                         yb1, ElectrodeRole::DC));
    }
    for (int k = 0; k + 1 < static_cast<int>(std::size(seg_edges)); ++k) {
        layout.electrodes.push_back(rect("dc_n" + std::to_string(k + 1),
                                         seg_edges[k], seg_edges[k + 1], yt0,
                                         yt1, ElectrodeRole::DC));
    }

    // Grounded fill between the RF structure and the DC bands, plus outer
    // frame strips. Inert (0 V) but part of the documented metal layout.
    layout.electrodes.push_back(rect("gnd_gap_s", -kRailX, kRailX, yb1,
                                     -kHalfCenter - kNarrowRail,
                                     ElectrodeRole::GROUND));
    layout.electrodes.push_back(rect("gnd_gap_n", -kRailX, kRailX,
                                     kHalfCenter + kWideRail, yt0,
                                     ElectrodeRole::GROUND));
    layout.electrodes.push_back(
        rect("gnd_outer_s", -kRailX, kRailX, yb0 - 400.0, yb0,
             ElectrodeRole::GROUND));
    layout.electrodes.push_back(
        rect("gnd_outer_n", -kRailX, kRailX, yt1, yt1 + 400.0,
             ElectrodeRole::GROUND));

    layout.validate();
    return layout;
}

TrapLayout mirror_y(const TrapLayout& layout)
{
    TrapLayout m = layout;
    for (auto& e : m.electrodes) {
        const double y0 = -e.y_max;
        const double y1 = -e.y_min;
        e.y_min = y0;
        e.y_max = y1;
    }
    m.convention.origin.y() = -m.convention.origin.y();
    return m;
}

} // namespace trapnoise
