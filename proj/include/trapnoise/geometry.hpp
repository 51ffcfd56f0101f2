#ifndef TRAPNOISE_GEOMETRY_HPP
#define TRAPNOISE_GEOMETRY_HPP

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "trapnoise/errors.hpp"

namespace trapnoise {

// Repo-wide frame: x axial (along the rails), y in-plane transverse,
// z surface normal. Electrodes live in the z = 0 plane, the trapping
// region has z > 0. Internal unit is the meter; layout files use um.
struct CoordinateConvention {
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();  // point on the plane, m

    static Eigen::Vector3d axial_axis() { return {1.0, 0.0, 0.0}; }
    static Eigen::Vector3d surface_normal() { return {0.0, 0.0, 1.0}; }
};

enum class ElectrodeRole { RF, DC, CENTER, GROUND };

std::string to_string(ElectrodeRole role);
ElectrodeRole role_from_string(std::string_view s);

struct RectElectrode {
    std::string name;
    double x_min = 0.0, x_max = 0.0;  // m
    double y_min = 0.0, y_max = 0.0;  // m
    ElectrodeRole role = ElectrodeRole::DC;

    double width_x() const { return x_max - x_min; }
    double width_y() const { return y_max - y_min; }
};

struct TrapLayout {
    std::string name;
    std::vector<RectElectrode> electrodes;
    CoordinateConvention convention;
    std::vector<std::string> rf_names;

    const RectElectrode& electrode(std::string_view ename) const;
    const RectElectrode& center_electrode() const;
    bool is_rf(std::string_view ename) const;

    // Electrodes that carry a noise term or a control voltage.
    std::vector<const RectElectrode*> non_ground() const;
    std::vector<const RectElectrode*> dc_controllable() const;  // DC + CENTER

    // Throws ValidationError on overlap, empty/unknown RF set, or a CENTER
    // count different from one.
    void validate() const;
};

// Layout file I/O (JSON, schema = 1, lengths in micrometers).
TrapLayout load_layout(const std::filesystem::path& path);
void save_layout(const TrapLayout& layout, const std::filesystem::path& path);
std::string serialize_layout(const TrapLayout& layout);
TrapLayout parse_layout(const std::string& text);

// The calibrated stand-in for the asymmetric five-wire trap: RF-null height
// 107 um and a center-electrode field angle of 15 deg at the null. Rail
// widths were fixed once by a two-parameter search on (height, angle).
TrapLayout reference_layout();

// Reflection about the y = 0 plane; used by the mirror-symmetry checks.
TrapLayout mirror_y(const TrapLayout& layout);

} // namespace trapnoise

#endif
